fn main() {
    env_logger::init();
    let stdout = std::io::stdout();
    let code = ecg_eho::app::main_with_args(std::env::args_os(), &mut stdout.lock(), &mut std::io::stderr());
    std::process::exit(code);
}
