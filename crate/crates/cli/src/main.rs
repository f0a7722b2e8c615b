fn main() {
    std::process::exit(tilelab::run(std::env::args_os()));
}
