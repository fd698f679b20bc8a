// Link the system OpenBLAS, which bundles BLAS and LAPACK symbols.
// No LAPACK backend feature is enabled on ndarray-linalg, so the final
// link resolves the `dgeev_`/`dgetrf_`/... externs against this library.
fn main() {
    println!("cargo:rustc-link-lib=dylib=openblas");
}
