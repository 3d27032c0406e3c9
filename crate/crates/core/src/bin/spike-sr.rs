fn main() {
    std::process::exit(spike_sr::cli::run_cli(std::env::args_os()));
}
