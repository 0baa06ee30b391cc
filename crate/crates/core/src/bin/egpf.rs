fn main() {
    let result = egpf::cli::main_with(std::env::args_os());
    if result.exit_code == 0 {
        println!("{}", result.summary);
        for a in &result.artifacts {
            println!("wrote {}", a.display());
        }
    } else {
        eprintln!("{}", result.summary);
    }
    std::process::exit(result.exit_code);
}
