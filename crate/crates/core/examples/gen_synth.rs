fn main() {
    // planted-partition at the reference dataset's scale
    let edges = neb_core::synthetic::planted_partition(1_138_499, 16_000, 3, 1, 999);
    let mut body = String::with_capacity(edges.len() * 16);
    for (u, v) in &edges {
        body.push_str(&format!("{u}\t{v}\n"));
    }
    std::fs::write("/tmp/ytprobe/synth.txt", body).unwrap();
    println!("{} edges", edges.len());
}
