fn main() {
    std::process::exit(cspmkt_cli::run(std::env::args_os()));
}
