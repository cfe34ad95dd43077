//! Precision, recall and F1 between predicted and reference keyframes.
//!
//! cargo run --example metrics_walkthrough

use image::GrayImage;
use tstar::metrics::{
    aggregate, evaluate_instance, percent_1dp, ssim, EvalContext, MetricReport, SimilarityKind, SimilaritySpec,
    SsimParams,
};
use tstar::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // One reference at 10 s; predictions at 12 s and 100 s.
    let video = VideoSource::new("clip", 4_000, 30.0)?;
    let reference = [ReferenceKeyframe::at(10.0)];
    let predicted = KeyframeSet::from_scored([(360, 0.9), (3_000, 0.4)], video.fps);
    let reports = evaluate_instance(
        &predicted,
        &reference,
        &video,
        &[SimilaritySpec::temporal(5.0)],
        &EvalContext::default(),
    )?;
    let (p, r, f) = (reports[0].precision, reports[0].recall, reports[0].f1);
    println!("temporal, 5 s threshold: P={:.1} R={:.1} F1={:.1}", percent_1dp(p), percent_1dp(r), percent_1dp(f));

    // Aggregate F1 is the mean of per-instance F1, not the harmonic mean of
    // mean precision and mean recall.
    let mixed = [
        MetricReport::new(SimilarityKind::Temporal, 1.0, 0.034, 8, 1),
        MetricReport::new(SimilarityKind::Temporal, 0.034, 1.0, 8, 1),
    ];
    let agg = &aggregate(&mixed)[0];
    let (mp, mr) = (agg.precision, agg.recall);
    println!(
        "two lopsided instances: mean F1 {:.1}%, harmonic of means {:.1}%",
        percent_1dp(agg.f1),
        percent_1dp(2.0 * mp * mr / (mp + mr))
    );

    let params = SsimParams::default();
    let ramp = GrayImage::from_fn(64, 64, |x, y| image::Luma([(x * 3 + y) as u8]));
    let dimmer = GrayImage::from_fn(64, 64, |x, y| image::Luma([ramp.get_pixel(x, y)[0] / 2 + 20]));
    let flipped = GrayImage::from_fn(64, 64, |x, y| image::Luma([255 - ramp.get_pixel(x, y)[0]]));
    println!("ssim(ramp, ramp)    = {:.4}", ssim(&ramp, &ramp, &params)?);
    println!("ssim(ramp, dimmer)  = {:.4}", ssim(&ramp, &dimmer, &params)?);
    println!("ssim(ramp, flipped) = {:.4}", ssim(&ramp, &flipped, &params)?);
    Ok(())
}
