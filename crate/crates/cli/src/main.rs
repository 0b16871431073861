fn main() {
    // Rust ships with SIGPIPE ignored, so a closed pipe (`growthgauge ... |
    // head`) surfaces as an EPIPE panic inside println!. Restore the default
    // disposition and die quietly like every other line-oriented tool.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(growthgauge_cli::run(std::env::args_os()));
}
