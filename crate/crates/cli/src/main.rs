fn main() {
    std::process::exit(compgeo_cli::run(std::env::args_os()));
}
