fn main() {
    if let Err(e) = entropy_coreset::cli::run(std::env::args_os()) {
        let msg = e.to_string().replace('\n', " ");
        eprintln!("error[{}]: {}", e.kind(), msg.trim());
        std::process::exit(1);
    }
}
