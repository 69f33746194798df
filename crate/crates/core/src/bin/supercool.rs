fn main() {
    std::process::exit(supercool::cli_io::cli_main(std::env::args_os()));
}
