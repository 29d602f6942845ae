fn main() {
    std::process::exit(hyprec_cli::run(std::env::args_os()));
}
