use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use netsound_bench::{aggregate, burst_packets, pcap_bytes};
use netsound_core::audio::{render_offline, RenderConfig};
use netsound_core::capture::PcapReader;
use netsound_core::soundscape::builtin_theme;

fn decode(c: &mut Criterion) {
    let recs = burst_packets();
    let bytes = pcap_bytes(&recs);
    let mut g = c.benchmark_group("decode");
    g.throughput(Throughput::Elements(recs.len() as u64));
    g.bench_function("pcap", |b| {
        b.iter(|| {
            let mut r = PcapReader::new(black_box(&bytes[..])).unwrap();
            let mut n = 0usize;
            while let Some(ev) = r.next_event() {
                ev.unwrap();
                n += 1;
            }
            n
        })
    });
    g.finish();
}

fn analysis(c: &mut Criterion) {
    let recs = burst_packets();
    let mut g = c.benchmark_group("aggregate");
    g.throughput(Throughput::Elements(recs.len() as u64));
    g.bench_function("burst_60s", |b| b.iter(|| aggregate(black_box(&recs))));
    g.finish();
}

fn render(c: &mut Criterion) {
    let aggs = aggregate(&burst_packets());
    let span = &aggs[28..33];
    let mut g = c.benchmark_group("render");
    g.sample_size(10);
    g.throughput(Throughput::Elements(span.len() as u64 * 48_000));
    for name in ["abstract", "forest", "city"] {
        let theme = builtin_theme(name).unwrap();
        for workers in [1usize, 4] {
            let cfg = RenderConfig { workers, ..Default::default() };
            g.bench_with_input(BenchmarkId::new(name, workers), &cfg, |b, cfg| {
                b.iter(|| render_offline(span, &theme, &theme.mixer, cfg).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, decode, analysis, render);
criterion_main!(benches);
