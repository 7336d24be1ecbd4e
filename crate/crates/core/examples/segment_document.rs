//! Sentence segmentation with byte offsets, and pre-segmented ingestion.
//!
//! Run with `cargo run --example segment_document`.

use entailgine::segment::{ingest_presegmented, segment, SegmenterConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "Dr. Smith arrived at 9 a.m. sharp. He left early! Was it 5 p.m.? 42 people saw him.";
    let doc = segment("visit", text, &SegmenterConfig::default());
    for span in doc.spans() {
        println!("[{}] {}..{} {:?}", span.span_index, span.start, span.end, span.text);
        assert_eq!(&doc.text()[span.start..span.end], span.text);
    }

    // custom abbreviations and a larger minimum span length
    let cfg = SegmenterConfig::default().with_abbreviation("approx.").with_min_span_chars(10);
    let doc = segment("custom", "It weighs approx. 3 kg. Ok. That is heavy.", &cfg);
    println!("{:?}", doc.sentences().collect::<Vec<_>>());

    // one span per non-blank line
    let doc = ingest_presegmented("lines", &["First line.", "", "Second line."])?;
    println!("{} spans, text {:?}", doc.len(), doc.text());
    Ok(())
}
