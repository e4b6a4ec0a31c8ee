fn main() {
    let (code, _, text) = gw_cli::run_rendered(std::env::args_os());
    if code == gw_cli::EXIT_USAGE && text.starts_with("error") {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
    std::process::exit(code);
}
