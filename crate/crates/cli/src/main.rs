fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(occmfg_cli::run_command(&argv));
}
