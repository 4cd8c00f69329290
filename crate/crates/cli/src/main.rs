fn main() {
    std::process::exit(fracwave_cli::dispatch(std::env::args_os()));
}
