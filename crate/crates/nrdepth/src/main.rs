fn main() {
    std::process::exit(nrdepth::cli::run_subcommand(std::env::args_os()));
}
