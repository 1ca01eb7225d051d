fn main() {
    std::process::exit(person_removal::cli::run(std::env::args_os()));
}
