fn main() {
    if let Ok(v) = std::env::var("GSA_DOF_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: GSA_DOF_THREADS must be a positive integer, got {v:?}");
                std::process::exit(gsa_dof::cli::EXIT_USAGE);
            }
        }
    }
    std::process::exit(gsa_dof::cli::run(std::env::args_os()));
}
