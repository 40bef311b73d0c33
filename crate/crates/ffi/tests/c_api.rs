use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use spanforge_ffi::*;

const CORPUS: &str = r#"{"id":"t1","split":"train","tokens":[{"surface":"he","head":1},{"surface":"kicked","head":null},{"surface":"the","head":1},{"surface":"bucket","head":1}],"mwes":[{"indices":[1,2,3],"type":"VERB"}]}
{"id":"t2","split":"train","tokens":[{"surface":"she","head":1},{"surface":"kicked","head":null},{"surface":"the","head":1},{"surface":"bucket","head":1}],"mwes":[{"indices":[1,2,3],"type":"VERB"}]}
{"id":"d1","split":"dev","tokens":[{"surface":"they","head":1},{"surface":"kicked","head":null},{"surface":"the","head":1},{"surface":"bucket","head":1}],"mwes":[{"indices":[1,2,3],"type":"VERB"}]}
{"id":"x1","split":"test","tokens":[{"surface":"we","head":1},{"surface":"kicked","head":null},{"surface":"the","head":1},{"surface":"bucket","head":1},{"surface":"today","head":1}],"mwes":[{"indices":[1,2,3],"type":"VERB"}]}
"#;

fn c(path: &Path) -> CString {
    CString::new(path.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = sf_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load(dir: &Path) -> *mut SfCorpus {
    let path = dir.join("c.jsonl");
    std::fs::write(&path, CORPUS).unwrap();
    let mut corpus = ptr::null_mut();
    assert_eq!(unsafe { sf_corpus_load(c(&path).as_ptr(), &mut corpus) }, SfStatus::Ok);
    corpus
}

#[test]
fn baseline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = load(dir.path());
    unsafe {
        assert_eq!(sf_corpus_len(corpus), 4);
        assert_eq!(sf_corpus_mwe_count(corpus), 4);

        let mut probs = ptr::null_mut();
        assert_eq!(sf_probabilities_baseline(corpus, corpus, &mut probs), SfStatus::Ok);

        let grid = CString::new("0.2:0.6:0.2").unwrap();
        let mut best = SfThresholds { tau_start: 0.0, tau_end: 0.0, tau_inside: 0.0 };
        assert_eq!(
            sf_tune(corpus, probs, grid.as_ptr(), SfOverlapPolicy::Greedy, true, &mut best),
            SfStatus::Ok
        );
        assert_eq!(best, SfThresholds { tau_start: 0.2, tau_end: 0.2, tau_inside: 0.2 });

        let mut preds = ptr::null_mut();
        assert_eq!(
            sf_reconstruct(corpus, probs, best, SfOverlapPolicy::Greedy, true, &mut preds),
            SfStatus::Ok
        );
        assert_eq!(sf_predictions_count(preds), 4);

        let mut scores = SfScores::default();
        assert_eq!(sf_evaluate(preds, corpus, &mut scores), SfStatus::Ok);
        assert_eq!((scores.true_positives, scores.false_positives, scores.false_negatives), (4, 0, 0));
        assert_eq!(scores.f1, 100.0);

        let out = dir.path().join("pred.jsonl");
        assert_eq!(sf_predictions_write(preds, c(&out).as_ptr()), SfStatus::Ok);
        assert!(std::fs::read_to_string(&out).unwrap().contains("\"indices\":[1,2,3]"));

        sf_predictions_free(preds);
        sf_probabilities_free(probs);
        sf_corpus_free(corpus);
    }
}

#[test]
fn artifact_write_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = load(dir.path());
    let path = dir.path().join("proj.json");
    let version = CString::new("v1").unwrap();
    let mut digest = [0 as std::ffi::c_char; 65];
    unsafe {
        assert_eq!(
            sf_artifact_write(corpus, version.as_ptr(), c(&path).as_ptr(), digest.as_mut_ptr()),
            SfStatus::Ok
        );
        let digest = CStr::from_ptr(digest.as_ptr()).to_str().unwrap().to_string();
        assert_eq!(digest.len(), 64);
        assert!(std::fs::read_to_string(&path).unwrap().contains(&digest));
        assert_eq!(sf_artifact_verify(c(&path).as_ptr()), SfStatus::Ok);

        let mut bytes = std::fs::read(&path).unwrap();
        let at = bytes.windows(9).position(|w| w == b"\"start\":[").unwrap() + 9;
        bytes[at] ^= 1;
        std::fs::write(&path, bytes).unwrap();
        assert_eq!(sf_artifact_verify(c(&path).as_ptr()), SfStatus::Integrity);
        assert!(last_error().contains("integrity"));
        sf_corpus_free(corpus);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(sf_corpus_load(ptr::null(), &mut corpus), SfStatus::InvalidArgument);
        assert!(corpus.is_null());
        assert_eq!(last_error(), "path is null");

        let missing = CString::new("/nonexistent/c.jsonl").unwrap();
        assert_eq!(sf_corpus_load(missing.as_ptr(), &mut corpus), SfStatus::Io);
        assert!(corpus.is_null());

        let dir = tempfile::tempdir().unwrap();
        let bad = dir.path().join("bad.jsonl");
        std::fs::write(&bad, "{\"id\":1}\n").unwrap();
        assert_eq!(sf_corpus_load(c(&bad).as_ptr(), &mut corpus), SfStatus::InputData);
        assert!(last_error().contains(":1:"));

        let real = load(dir.path());
        let mut probs = ptr::null_mut();
        sf_probabilities_baseline(real, real, &mut probs);
        let bad_t = SfThresholds { tau_start: 2.0, tau_end: 0.5, tau_inside: 0.5 };
        let mut preds = ptr::null_mut();
        assert_eq!(sf_reconstruct(real, probs, bad_t, SfOverlapPolicy::AllowAll, false, &mut preds), SfStatus::Config);
        assert!(preds.is_null());
        assert_eq!(sf_evaluate(ptr::null(), real, &mut SfScores::default()), SfStatus::InvalidArgument);

        assert_eq!(sf_corpus_len(ptr::null()), 0);
        sf_corpus_free(ptr::null_mut());
        sf_probabilities_free(probs);
        sf_corpus_free(real);
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(sf_version()) }.to_str().unwrap();
    assert_eq!(v, spanforge::VERSION);
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/spanforge.h")).unwrap();
    for name in ["sf_corpus_load", "sf_reconstruct", "sf_evaluate", "sf_artifact_verify", "SF_STATUS_INTEGRITY", "typedef struct SfCorpus SfCorpus"] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

#[test]
fn c_program_links_against_staticlib() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let lib = profile_dir.join("libspanforge_ffi.a");
    if !lib.exists() {
        panic!("static library not found at {}", lib.display());
    }
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let compiled = std::process::Command::new("cc")
        .arg(manifest.join("examples/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .output();
    let compiled = match compiled {
        Ok(out) => out,
        Err(e) => {
            eprintln!("skipping: no C compiler ({e})");
            return;
        }
    };
    assert!(compiled.status.success(), "{}", String::from_utf8_lossy(&compiled.stderr));
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(&corpus, CORPUS).unwrap();
    let run = std::process::Command::new(&bin).arg(&corpus).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("tp=4 fp=0 fn=0 f1=100.0"), "{stdout}");
}
