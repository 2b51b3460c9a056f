fn main() {
    std::process::exit(dcp_svp::harness::main_with_args(std::env::args_os()));
}
