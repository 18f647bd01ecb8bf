fn main() {
    std::process::exit(fermi_core::cli::main())
}
