fn main() {
    std::process::exit(spam_bench::cli_run(std::env::args_os()));
}
