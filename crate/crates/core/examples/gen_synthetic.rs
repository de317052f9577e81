//! Write the default synthetic corpus as CSV to the given path.
fn main() {
    let path = std::env::args()
        .nth(1)
        .expect("usage: gen_synthetic <out.csv>");
    let corpus = rsdetect::synthetic::generate(&rsdetect::synthetic::SyntheticSpec::default());
    rsdetect::corpus::save_csv(&corpus, path).expect("write corpus");
}
