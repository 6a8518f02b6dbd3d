fn main() {
    std::process::exit(zeroshot_har::cli::main_with_args(std::env::args_os()));
}
