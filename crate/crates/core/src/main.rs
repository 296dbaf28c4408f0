fn main() {
    std::process::exit(kirchhoff_fiber::cli::main_entry() as i32);
}
