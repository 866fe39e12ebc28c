use proptest::prelude::*;

use pasldpc::constellation::{mb_from_entropy, AskConstellation, CodeRate};
use pasldpc::lifting::{expand_parallel, lift_circulant, SparseParityMatrix};
use pasldpc::optimizer::{random_candidate, repair, DeConfig};
use pasldpc::paschain::{ccdm_decode, ccdm_encode, BpDecoder, Composition, SystematicEncoder};
use pasldpc::protograph::{BaseMatrix, DesignConstraints};
use pasldpc::rng::stream;
use pasldpc::sim::{read_csv, write_csv, SimResult};

fn composition() -> impl Strategy<Value = Composition> {
    prop::collection::vec(0u64..6, 2..6)
        .prop_filter("non-empty", |c| c.iter().sum::<u64>() > 0)
        .prop_map(|c| Composition::new(c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ccdm_is_a_bijection_onto_the_type_class(comp in composition(), seed in any::<u64>()) {
        let k = comp.input_bits();
        let mut rng = stream(seed, &[]);
        for _ in 0..20 {
            let bits: Vec<u8> = (0..k).map(|_| (rand::RngCore::next_u32(&mut rng) & 1) as u8).collect();
            let seq = ccdm_encode(&bits, &comp).unwrap();
            let mut counts = vec![0u64; comp.counts().len()];
            for &a in &seq { counts[a] += 1; }
            prop_assert_eq!(&counts[..], comp.counts());
            prop_assert_eq!(ccdm_decode(&seq, &comp).unwrap(), bits);
        }
    }

    #[test]
    fn repair_yields_valid_matrices(seed in any::<u64>(), d in 1usize..4) {
        let config = DeConfig::new(CodeRate::new(1, 2).unwrap(), 2, d, vec![1.0]);
        let mut rng = stream(seed, &[]);
        let a = random_candidate(&config, &mut rng).unwrap();
        prop_assert!(a.is_valid(&config.constraints()));
        let mut b = a.clone();
        repair(&mut b, &config.constraints(), &mut rng).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn repair_fixes_arbitrary_entries(entries in prop::collection::vec(0u32..7, 24)) {
        let mut a = BaseMatrix::new(3, 8, entries, vec![1; 8]).unwrap();
        let limits = DesignConstraints::default();
        repair(&mut a, &limits, &mut stream(1, &[])).unwrap();
        prop_assert!(a.is_valid(&limits), "{:?}", a.violations(&limits));
    }

    #[test]
    fn lifting_preserves_degrees(entries in prop::collection::vec(0u32..4, 12), q in 1usize..12, seed in any::<u64>()) {
        let base = BaseMatrix::new(3, 4, entries, vec![1, 1, 2, 2]).unwrap();
        let stage1 = expand_parallel(&base, 3).unwrap();
        let (h, _) = lift_circulant(&stage1, q, seed).unwrap();
        prop_assert_eq!((h.rows(), h.cols()), (9 * q, 12 * q));
        for c in 0..h.cols() {
            prop_assert_eq!(h.col(c).len() as u32, base.col_sum(c / (3 * q)));
        }
        for r in 0..h.rows() {
            prop_assert_eq!(h.row(r).len() as u32, base.row_sum(r / (3 * q)));
        }
        prop_assert_eq!(h.column_levels().unwrap()[c_last(&h)], 2);
    }

    #[test]
    fn alist_roundtrip(dense in prop::collection::vec(0u8..2, 30)) {
        let h = SparseParityMatrix::from_dense(5, 6, &dense).unwrap();
        prop_assert_eq!(SparseParityMatrix::from_alist(&h.to_alist()).unwrap(), h);
    }

    #[test]
    fn systematic_encoding_gives_codewords(dense in prop::collection::vec(0u8..2, 40), info in any::<u64>()) {
        let h = SparseParityMatrix::from_dense(4, 10, &dense).unwrap();
        if let Ok(enc) = SystematicEncoder::new(&h, &[0, 1, 2, 3]) {
            let mut word: Vec<u8> = (0..10).map(|i| ((info >> i) & 1) as u8).collect();
            enc.encode_in_place(&mut word);
            prop_assert!(h.is_codeword(&word));
        }
    }

    #[test]
    fn bit_accounting_identity(m in 2usize..8, num in 1u32..16, den_extra in 1u32..8, n_c in 1usize..500) {
        let den = num + den_extra;
        let n = m * n_c;
        let c = f64::from(num) / f64::from(den);
        let gamma = 1.0 - (1.0 - c) * m as f64;
        prop_assume!(gamma >= 0.0);
        let parity = (1.0 - c) * n as f64;
        let lhs = (m - 1) as f64 * n_c as f64 + gamma * n_c as f64 + parity;
        prop_assert!((lhs - n as f64).abs() < 1e-9 * n as f64);
    }

    #[test]
    fn decoder_sign_symmetry(llrs in prop::collection::vec(-8.0f64..8.0, 8)) {
        // every check has even degree, so the all-ones word is a codeword
        let h = SparseParityMatrix::from_dense(4, 8, &[
            1, 1, 0, 0, 1, 1, 0, 0,
            0, 1, 1, 0, 0, 1, 1, 0,
            0, 0, 1, 1, 0, 0, 1, 1,
            1, 0, 0, 1, 1, 0, 0, 1,
        ]).unwrap();
        let dec = BpDecoder::new(&h);
        let a = dec.decode(&llrs, 20);
        let flipped: Vec<f64> = llrs.iter().map(|l| -l).collect();
        let b = dec.decode(&flipped, 20);
        prop_assert_eq!(a.iterations, b.iterations);
        prop_assert_eq!(a.converged, b.converged);
        let complement: Vec<u8> = b.bits.iter().map(|x| 1 - x).collect();
        // hard decisions of exact ties (total LLR 0) are not symmetric; skip them
        let ties = llrs.contains(&0.0);
        if !ties {
            prop_assert_eq!(a.bits, complement);
        }
    }

    #[test]
    fn mb_entropy_hits_target(h in 1.05f64..3.95) {
        let c = AskConstellation::new(4).unwrap();
        let pmf = mb_from_entropy(&c, h).unwrap();
        let direct: f64 = pmf.probs().iter().filter(|p| **p > 0.0).map(|p| -p * p.log2()).sum();
        prop_assert!((direct - h).abs() < 1e-9);
    }

    #[test]
    fn csv_roundtrip(frames in 1u64..1_000_000, errs in 0u64..1000, se in 0.7f64..2.7, snr in -5.0f64..30.0) {
        let errs = errs.min(frames);
        let (lo, hi) = pasldpc::sim::clopper_pearson(errs, frames, 0.05);
        let r = SimResult {
            se, snr_db: snr, frames, frame_errors: errs, bit_errors: errs * 3,
            fer: errs as f64 / frames as f64, ci95_lo: lo, ci95_hi: hi, wallclock_s: 0.0, seed: frames ^ errs,
        };
        prop_assert!(lo <= r.fer && r.fer <= hi);
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), vec![r]);
    }

    #[test]
    fn grid_counts(start in -10.0f64..10.0, steps in 0usize..50, step in prop::sample::select(vec![0.01, 0.1, 0.25, 0.5, 1.0])) {
        let stop = start + steps as f64 * step;
        let g = pasldpc::step_grid(start, stop, step).unwrap();
        prop_assert_eq!(g.len(), steps + 1);
    }
}

fn c_last(h: &SparseParityMatrix) -> usize {
    h.cols() - 1
}
