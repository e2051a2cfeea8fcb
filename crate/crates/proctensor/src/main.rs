fn main() {
    println!("proctensor");
}
