fn main() {
    std::process::exit(wavecast::cli::main_entry(std::env::args_os()));
}
