// The buildings chapter shows a scenario inline and its doctests load the
// same scenario from a file; the two must not drift apart.
#[test]
fn inline_scenario_matches_its_file() {
    let chapter = include_str!("../../../book/src/buildings.md");
    let start = chapter.find("```toml\n").expect("toml block") + "```toml\n".len();
    let end = start + chapter[start..].find("```").unwrap();
    assert_eq!(&chapter[start..end], include_str!("../../../book/src/single_room.toml"));
}
