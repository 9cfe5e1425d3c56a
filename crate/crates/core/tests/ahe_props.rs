mod common;

use pretzel_core::ahe::{
    ciphertext_size, keygen, AheParams, BackendParams, KeyPair, PackedPlaintext, PublicKey,
};
use pretzel_core::RngCore;
use proptest::prelude::*;

fn bv_params() -> AheParams {
    AheParams::new(BackendParams::bv_with_degree(64), 20).unwrap()
}

fn paillier_params() -> AheParams {
    AheParams::new(BackendParams::Paillier { modulus_bits: 256 }, 20).unwrap()
}

fn keys(params: &AheParams, seed: u64) -> KeyPair {
    keygen(params, pretzel_core::seed_from_u64(seed)).unwrap()
}

/// Slot values below `2^bits`.
fn random_pt(params: &AheParams, rng: &mut impl RngCore, bits: u32) -> Vec<u64> {
    (0..params.slots())
        .map(|_| rng.next_u64() & ((1u64 << bits) - 1))
        .collect()
}

fn enc(pk: &PublicKey, params: &AheParams, v: &[u64], rng: &mut impl RngCore) -> pretzel_core::ahe::Ciphertext {
    pk.encrypt(&PackedPlaintext::new(params, v.to_vec()).unwrap(), rng)
        .unwrap()
}

fn both() -> [(AheParams, KeyPair); 2] {
    let b = bv_params();
    let p = paillier_params();
    [(b, keys(&b, 1)), (p, keys(&p, 2))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decrypt_inverts_encrypt(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for (params, kp) in both() {
            let v = random_pt(&params, &mut rng, params.slot_bits);
            let c = enc(&kp.pk, &params, &v, &mut rng);
            prop_assert_eq!(kp.sk.decrypt(&c).unwrap().into_slots(), v.clone());
            let c = kp.sk.encrypt(&PackedPlaintext::new(&params, v.clone()).unwrap(), &mut rng).unwrap();
            prop_assert_eq!(kp.sk.decrypt(&c).unwrap().into_slots(), v.clone());
        }
    }

    #[test]
    fn addition_is_slotwise(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for (params, kp) in both() {
            // headroom so Paillier fields never carry
            let a = random_pt(&params, &mut rng, params.slot_bits - 1);
            let b = random_pt(&params, &mut rng, params.slot_bits - 1);
            let c = kp.pk.add(&enc(&kp.pk, &params, &a, &mut rng), &enc(&kp.pk, &params, &b, &mut rng)).unwrap();
            let want: Vec<u64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            prop_assert_eq!(kp.sk.decrypt(&c).unwrap().into_slots(), want.clone());
        }
    }

    #[test]
    fn scalar_mul_is_slotwise(seed in any::<u64>(), m in 0u64..64) {
        let mut rng = common::rng(seed);
        for (params, kp) in both() {
            let a = random_pt(&params, &mut rng, params.slot_bits - 6);
            let c = kp.pk.scalar_mul(&enc(&kp.pk, &params, &a, &mut rng), m).unwrap();
            let want: Vec<u64> = a.iter().map(|x| x * m).collect();
            prop_assert_eq!(kp.sk.decrypt(&c).unwrap().into_slots(), want.clone());
        }
    }

    #[test]
    fn bv_scalar_mul_wraps_mod_t(seed in any::<u64>(), m in 1u64..1 << 20) {
        let mut rng = common::rng(seed);
        let params = bv_params();
        let kp = keys(&params, 3);
        let a = random_pt(&params, &mut rng, 4);
        let c = kp.pk.scalar_mul(&enc(&kp.pk, &params, &a, &mut rng), m).unwrap();
        let want: Vec<u64> = a.iter().map(|x| x * m % (1 << 20)).collect();
        prop_assert_eq!(kp.sk.decrypt(&c).unwrap().into_slots(), want.clone());
    }

    #[test]
    fn rotation_moves_unwrapped_slots(seed in any::<u64>(), k in 0usize..64) {
        let mut rng = common::rng(seed);
        let params = bv_params();
        let kp = keys(&params, 4);
        let v = random_pt(&params, &mut rng, params.slot_bits);
        let r = kp.pk.rotate_left(&enc(&kp.pk, &params, &v, &mut rng), k).unwrap();
        let got = kp.sk.decrypt(&r).unwrap();
        prop_assert_eq!(&got.slots()[..64 - k], &v[k..]);
    }

    #[test]
    fn ciphertext_bytes_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for (params, kp) in both() {
            let v = random_pt(&params, &mut rng, params.slot_bits);
            let c = enc(&kp.pk, &params, &v, &mut rng);
            let bytes = kp.pk.encode_ciphertext(&c).unwrap();
            prop_assert_eq!(bytes.len(), ciphertext_size(&params));
            prop_assert_eq!(kp.pk.decode_ciphertext(&bytes).unwrap(), c);
        }
    }

    #[test]
    fn encryption_is_randomized(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for (params, kp) in both() {
            let v = random_pt(&params, &mut rng, params.slot_bits);
            let a = enc(&kp.pk, &params, &v, &mut rng);
            let b = enc(&kp.pk, &params, &v, &mut rng);
            prop_assert_ne!(a, b);
        }
    }
}

#[test]
fn keys_round_trip_through_bytes() {
    for (params, kp) in both() {
        let pk = PublicKey::from_bytes(&kp.pk.to_bytes()).unwrap();
        assert_eq!(pk, kp.pk);
        let sk = pretzel_core::ahe::SecretKey::from_bytes(&kp.sk.to_bytes()).unwrap();
        let mut rng = common::rng(9);
        let v = random_pt(&params, &mut rng, params.slot_bits);
        let c = enc(&pk, &params, &v, &mut rng);
        assert_eq!(sk.decrypt(&c).unwrap().slots(), &v[..]);
    }
}

#[test]
fn default_sizes() {
    let p = AheParams::new(BackendParams::paillier(), 41).unwrap();
    let b = AheParams::new(BackendParams::bv(), 41).unwrap();
    assert_eq!((ciphertext_size(&p), p.slots()), (256, 24));
    assert_eq!((ciphertext_size(&b), b.slots()), (16384, 1024));
    assert_eq!(p.ciphertext_size(), 256);
    assert_eq!(b.ciphertext_size(), 16384);
}

#[test]
fn paillier_cannot_rotate() {
    let params = paillier_params();
    let kp = keys(&params, 5);
    let mut rng = common::rng(1);
    let c = enc(&kp.pk, &params, &vec![0; params.slots()], &mut rng);
    assert!(kp.pk.rotate_left(&c, 1).is_err());
}

#[test]
fn mismatched_backends_are_rejected() {
    let [(bp, bk), (pp, pk)] = both();
    let mut rng = common::rng(2);
    let cb = enc(&bk.pk, &bp, &vec![0; bp.slots()], &mut rng);
    let cp = enc(&pk.pk, &pp, &vec![0; pp.slots()], &mut rng);
    assert!(bk.pk.add(&cb, &cp).is_err());
    assert!(pk.sk.decrypt(&cb).is_err());
}
