fn main() {
    std::process::exit(retroptics::cli::run(std::env::args_os()));
}
