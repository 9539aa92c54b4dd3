fn main() {
    std::process::exit(routerq_cli::cli_main(std::env::args_os()));
}
