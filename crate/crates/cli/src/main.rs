fn main() {
    std::process::exit(seqeq_cli::run(std::env::args_os()));
}
