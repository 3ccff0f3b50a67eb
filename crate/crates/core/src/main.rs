fn main() {
    std::process::exit(toric_spectra::cli::main_with_args(std::env::args_os()));
}
