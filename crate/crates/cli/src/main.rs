fn main() {
    std::process::exit(echoq::main_with_args(std::env::args_os()));
}
