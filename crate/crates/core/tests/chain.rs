use pasldpc::constellation::{operating_pmf, AskConstellation, CodeRate, ShapedSource, SymbolPmf};
use pasldpc::lifting::{lift, SparseParityMatrix};
use pasldpc::paschain::{
    composition_from_pmf, demap_llrs, FrameTrace, PasChain, TraceHeader, TraceReader, TraceWriter,
};
use pasldpc::protograph::robust_base_matrix;
use pasldpc::rng::stream;
use rand::RngCore;

#[test]
fn demapper_matches_direct_summation() {
    let c = AskConstellation::new(4).unwrap();
    let source = ShapedSource::new(c.clone(), SymbolPmf::uniform(16), 1.0).unwrap();
    let y = 2.0;
    let llrs = demap_llrs(&[y], &source);
    for level in 1..=4 {
        let (mut zero, mut one) = (0.0f64, 0.0f64);
        for (i, &x) in c.points().iter().enumerate() {
            let lik = (-(y - x) * (y - x) / 2.0).exp() / 16.0;
            if c.bit(i, level) == 0 {
                zero += lik;
            } else {
                one += lik;
            }
        }
        let want = (zero / one).ln();
        assert!(
            (llrs[level - 1] - want).abs() < 1e-9,
            "level {level}: {} vs {want}",
            llrs[level - 1]
        );
    }
}

#[test]
fn full_length_composition_is_close_to_target() {
    let c = AskConstellation::new(4).unwrap();
    let pmf = operating_pmf(2.1, CodeRate::new(13, 16).unwrap(), 4).unwrap();
    let target = pmf.amplitude_pmf(&c);
    let n_c = 16224 / 4;
    let comp = composition_from_pmf(&target, n_c).unwrap();
    assert_eq!(comp.counts().iter().sum::<u64>(), n_c as u64);
    let tv: f64 = comp
        .pmf()
        .iter()
        .zip(&target)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv <= 8.0 / n_c as f64, "tv {tv}");
}

#[test]
fn trace_roundtrip() {
    let header = TraceHeader {
        code_id: "abc123".into(),
        se: 2.1,
        snr_db: 14.25,
        seed: 99,
    };
    let mut rng = stream(3, &[]);
    let frames: Vec<FrameTrace> = (0..5)
        .map(|i| FrameTrace {
            index: i,
            bits: (0..(13 + i as usize * 7))
                .map(|_| (rng.next_u32() & 1) as u8)
                .collect(),
            symbols: (0..(4 + i as usize))
                .map(|k| k as f64 * -0.37 + i as f64)
                .collect(),
        })
        .collect();
    let mut w = TraceWriter::new(Vec::new(), &header).unwrap();
    for f in &frames {
        w.write(f).unwrap();
    }
    let bytes = w.finish().unwrap();
    let mut r = TraceReader::new(bytes.as_slice()).unwrap();
    assert_eq!(r.header, header);
    let mut back = Vec::new();
    while let Some(f) = r.next_frame().unwrap() {
        back.push(f);
    }
    assert_eq!(back, frames);
}

#[test]
fn edge_list_keeps_lineage() {
    let h = lift(&robust_base_matrix(), 3, 4, 11).unwrap();
    let mut buf = Vec::new();
    h.write_edge_list(&mut buf).unwrap();
    let back = SparseParityMatrix::read_edge_list(buf.as_slice()).unwrap();
    assert_eq!(back, h);
    let origin = back.origin.as_ref().unwrap();
    assert_eq!((origin.f, origin.q, origin.seed), (3, 4, 11));
    assert_eq!(back.column_levels().unwrap().len(), h.cols());
}

#[test]
fn chain_roundtrip_on_small_lift() {
    let h = lift(&robust_base_matrix(), 3, 8, 5).unwrap();
    let chain = PasChain::for_operating_point(h, CodeRate::new(13, 16).unwrap(), 4, 1.5).unwrap();
    let source = chain.source_at_snr_db(60.0).unwrap();
    let acc = chain.accounting();
    assert_eq!(acc.amplitude_bits + acc.extra_bits + acc.parity_bits, acc.n);
    let mut rng = stream(8, &[]);
    for _ in 0..5 {
        let bits: Vec<u8> = (0..chain.frame_len())
            .map(|_| (rng.next_u32() & 1) as u8)
            .collect();
        let frame = chain.encode(&bits, &source).unwrap();
        assert!(chain.code().is_codeword(&frame.codeword));
        let rx = chain.receive(&frame.symbols, &source, 50);
        assert!(rx.decode.converged);
        assert_eq!(rx.frame_bits.unwrap(), bits);
    }
}
