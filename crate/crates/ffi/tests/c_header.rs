use std::path::{Path, PathBuf};
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include "defocus.h"

int main(void) {
    double px[4] = {0.1, 0.9, 0.9, 0.1};
    DefocusImage *img = NULL;
    if (defocus_image_new(2, 2, px, &img) != DEFOCUS_STATUS_OK) return 1;
    DefocusImage *bad = NULL;
    if (defocus_image_new(2, 2, NULL, &bad) != DEFOCUS_STATUS_NULL_POINTER) return 2;
    if (defocus_last_error() == NULL) return 3;
    size_t h = 0, w = 0;
    defocus_image_size(img, &h, &w);
    defocus_image_free(img);
    double scores[4] = {0.2, 0.9, 0.8, 0.1};
    uint32_t rank[2];
    if (defocus_edas_rank(scores, 2, 2, NULL, NULL, NULL, 1, NULL, rank) != DEFOCUS_STATUS_OK) return 4;
    printf("%zux%zu %.6f %u %u\n", h, w, defocus_f_alpha(0.8, 0.5, 0.3), rank[0], rank[1]);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = target_dir().join("libdefocus_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let exe = dir.path().join("main");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "2x2 0.702703 1 2\n");
}
