mod common;

use binsynth::caption::{generate_caption, parse_caption, same_labels, MAX_CAPTION_WORDS};
use binsynth::scene::{
    AttributeRecord, Direction, DirectionLabel, Movement, SceneSize, SourceAttributes,
};
use common::random_record;
use proptest::prelude::*;

#[test]
fn thousand_random_records_round_trip() {
    for seed in 0..1000 {
        let record = random_record(seed);
        let phrases: Vec<&str> = record.sources.iter().map(|s| s.event.as_str()).collect();
        let text = generate_caption(&record, &phrases);
        let parsed = parse_caption(&text).unwrap_or_else(|e| panic!("seed {seed}: {text:?}: {e}"));
        assert!(
            same_labels(&record, &parsed),
            "seed {seed}: {text:?}\n{record:#?}\n{parsed:#?}"
        );
        for (a, b) in record.sources.iter().zip(&parsed.sources) {
            assert!(
                a.event.eq_ignore_ascii_case(&b.event),
                "seed {seed}: {text:?}"
            );
        }
        let short = phrases.iter().all(|p| p.split_whitespace().count() <= 3);
        if record.sources.len() <= 2 && short {
            let words = text.split_whitespace().count();
            assert!(
                words < MAX_CAPTION_WORDS,
                "seed {seed}: {words} words in {text:?}"
            );
        }
    }
}

#[test]
fn double_still_table_example() {
    let r = parse_caption(
        "The printer is printing on the right of the scene, while the person is playing the didgeridoo directly in front.",
    )
    .unwrap();
    assert_eq!(r.sources.len(), 2);
    assert_eq!(r.sources[0].event, "The printer is printing");
    assert_eq!(
        r.sources[0].direction,
        Some(Direction::Label(DirectionLabel::Right))
    );
    assert_eq!(r.sources[1].event, "the person is playing the didgeridoo");
    assert_eq!(
        r.sources[1].direction,
        Some(Direction::Label(DirectionLabel::Front))
    );
    assert!(r.sources.iter().all(|s| s.movement == Movement::Still));
}

#[test]
fn mixed_table_example() {
    let r = parse_caption(
        "An engine slowly dying down is noticed on the left, as children's laughter and whistling gently move from directly in front to the left.",
    )
    .unwrap();
    assert_eq!(r.sources.len(), 2);
    assert_eq!(r.sources[0].movement, Movement::Still);
    assert_eq!(
        r.sources[0].direction,
        Some(Direction::Label(DirectionLabel::Left))
    );
    assert_eq!(r.sources[1].movement, Movement::Moving);
    assert_eq!(
        r.sources[1].direction,
        Some(Direction::Label(DirectionLabel::Front))
    );
    assert_eq!(
        r.sources[1].end_direction,
        Some(Direction::Label(DirectionLabel::Left))
    );
}

#[test]
fn inference_prompt_example() {
    let r =
        parse_caption("A man speaks in front while a dog barks from front right to left.").unwrap();
    assert_eq!(r.sources[0].event, "A man speaks");
    assert_eq!(r.sources[0].movement, Movement::Still);
    assert_eq!(
        r.sources[0].direction,
        Some(Direction::Label(DirectionLabel::Front))
    );
    assert_eq!(r.sources[1].event, "a dog barks");
    assert_eq!(r.sources[1].movement, Movement::Moving);
    assert_eq!(
        r.sources[1].direction,
        Some(Direction::Label(DirectionLabel::FrontRight))
    );
    assert_eq!(
        r.sources[1].end_direction,
        Some(Direction::Label(DirectionLabel::Left))
    );
}

#[test]
fn double_still_generation_names_both() {
    let r = AttributeRecord::new(
        SceneSize::Moderate,
        vec![
            SourceAttributes::still("printer", DirectionLabel::Right),
            SourceAttributes::still("didgeridoo", DirectionLabel::Front),
        ],
    );
    let text = generate_caption(
        &r,
        &[
            "The printer is printing",
            "The person is playing the didgeridoo",
        ],
    );
    assert_eq!(
        text,
        "The printer is printing on the right, while the person is playing the didgeridoo directly in front."
    );
}

proptest! {
    #[test]
    fn parser_is_total(text in "\\PC{0,80}") {
        let _ = parse_caption(&text);
    }

    #[test]
    fn parser_is_total_on_lexicon_soup(words in proptest::collection::vec(
        prop_oneof![
            Just("from"), Just("to"), Just("left"), Just("front"), Just("right"), Just("another"),
            Just("then"), Just(","), Just("and"), Just("far"), Just("45"), Just("degrees"), Just("°"),
            Just("moves"), Just("slowly"), Just("a dog"), Just("outdoors"), Just("ending"), Just("while"),
        ],
        0..20,
    )) {
        let _ = parse_caption(&words.join(" "));
    }
}
