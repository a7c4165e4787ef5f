use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rsl_core::data::{CYCLE_SAMPLES, PROTOCOL_RATE_HZ};
use rsl_core::features::{cochleogram, cqt, mfcc, stft, CochleaConfig, CqtConfig, MelConfig};
use rsl_core::models::{Classifier, Model, ModelConfig, Tensor, ViTConfig};
use rsl_core::signal::{dft, FramePlan, Waveform, WindowKind};

fn cycle() -> Waveform {
    let fs = PROTOCOL_RATE_HZ as f64;
    let samples = (0..CYCLE_SAMPLES)
        .map(|n| {
            let t = n as f64 / fs;
            0.5 * (2.0 * PI * 300.0 * t).sin() + 0.2 * (2.0 * PI * 1200.0 * t).sin()
        })
        .collect();
    Waveform::new(samples, PROTOCOL_RATE_HZ).unwrap()
}

fn transforms(c: &mut Criterion) {
    let w = cycle();
    let frame: Vec<f64> = w.samples()[..256].to_vec();
    c.bench_function("dft_256", |b| b.iter(|| dft(black_box(&frame))));

    let plan = FramePlan::new(256, 128, WindowKind::Hann).unwrap();
    c.bench_function("stft_cycle", |b| b.iter(|| stft(black_box(&w), &plan).unwrap()));

    let mel = MelConfig::default();
    c.bench_function("mfcc_cycle", |b| b.iter(|| mfcc(black_box(&w), &mel).unwrap()));

    let q = CqtConfig::default();
    c.bench_function("cqt_cycle", |b| b.iter(|| cqt(black_box(&w), &q).unwrap()));

    let coch = CochleaConfig::default();
    c.bench_function("cochleogram_cycle", |b| b.iter(|| cochleogram(black_box(&w), &coch).unwrap()));
}

fn models(c: &mut Criterion) {
    let model = Model::new(ModelConfig::Vit(ViTConfig::tiny(2)), 1).unwrap();
    let x = Tensor::new(vec![64, 144], (0..64 * 144).map(|i| (i % 17) as f64 / 17.0).collect()).unwrap();
    c.bench_function("tiny_vit_forward", |b| b.iter(|| model.logits(black_box(&x)).unwrap()));
    c.bench_function("tiny_vit_loss_and_grad", |b| b.iter(|| model.loss_and_grad(black_box(&x), 1).unwrap()));
}

criterion_group!(benches, transforms, models);
criterion_main!(benches);
