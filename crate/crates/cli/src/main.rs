fn main() {
    proxylight_cli::init_logging();
    let code = proxylight_cli::run(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
