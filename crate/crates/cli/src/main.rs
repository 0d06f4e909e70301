fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    std::process::exit(kakeya_lab::run_command(&argv));
}
