use track_model::{
    group_by_video, read_track_file, write_track_file, BBox, Category, Detection, TrackError,
};

#[test]
fn track_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tracks.txt");
    let records = vec![
        (
            "vid_a".to_string(),
            Detection::new(
                0,
                Category::Hand,
                Some(0),
                BBox::new(0.125, 0.25, 0.5, 0.75).unwrap(),
                1.0,
            )
            .unwrap(),
        ),
        (
            "vid_a".to_string(),
            Detection::new(
                1,
                Category::Object,
                None,
                BBox::new(0.1, 0.1, 0.30000000000000004, 0.9).unwrap(),
                0.875,
            )
            .unwrap(),
        ),
        (
            "vid_b".to_string(),
            Detection::new(
                3,
                Category::Object,
                Some(2),
                BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(),
                0.5,
            )
            .unwrap(),
        ),
    ];
    write_track_file(&path, &records).unwrap();
    let loaded = read_track_file(&path).unwrap();
    assert_eq!(loaded, records);

    let grouped = group_by_video(loaded);
    assert_eq!(grouped["vid_a"].len(), 2);
    assert_eq!(grouped["vid_b"].len(), 1);
}

#[test]
fn loader_reports_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(
        &path,
        "vid 0 hand 0 0.1 0.1 0.2 0.2 0.9\nvid 1 hand 0 0.9 0.1 0.2 0.2 0.9\n",
    )
    .unwrap();
    // Line 2 has x1 > x2.
    match read_track_file(&path) {
        Err(TrackError::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected parse error with line number, got {other:?}"),
    }

    std::fs::write(&path, "vid 0 hand 0 0.1 0.1\n").unwrap();
    match read_track_file(&path) {
        Err(TrackError::Parse { line, msg, .. }) => {
            assert_eq!(line, 1);
            assert!(msg.contains("9 fields"));
        }
        other => panic!("expected field-count error, got {other:?}"),
    }
}
