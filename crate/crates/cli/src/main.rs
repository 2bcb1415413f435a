fn main() {
    println!("ibshell placeholder");
}
