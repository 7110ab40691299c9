use gkdcv::image_io::first_k_split;
use gkdcv::synthetic::{bundled_dir, SyntheticFaces};
use gkdcv::{load_image, DatasetManifest, Role};

#[test]
fn generator_reproduces_bundled_images() {
    let dir = tempfile::tempdir().unwrap();
    let paths = SyntheticFaces::default().write(dir.path()).unwrap();
    assert_eq!(paths.len(), 40);
    for p in paths {
        let rel = p.strip_prefix(dir.path()).unwrap();
        let bundled = std::fs::read(bundled_dir().join(rel)).unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), bundled, "{}", rel.display());
    }
}

#[test]
fn bundled_manifest_is_a_first_three_split() {
    let manifest = DatasetManifest::load(bundled_dir().join("manifest.csv")).unwrap();
    assert_eq!(manifest.num_classes(), 8);
    assert_eq!(manifest.train_counts(), vec![3; 8]);
    assert_eq!(manifest.with_role(Role::ProbeGenuine).count(), 16);
    assert_eq!(manifest.entries(), first_k_split(bundled_dir(), 3).unwrap().entries());
    let img = load_image(manifest.resolve(&manifest.entries()[0])).unwrap();
    assert_eq!((img.height(), img.width()), (92, 112));
}
