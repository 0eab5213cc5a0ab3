//! Sets up authorities, enrolls two vehicles, and checks signatures in both
//! wire forms.
//!
//! cargo run --example sign_and_verify

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use vanet_ibgs::algebra::{make_transparent_context, DEFAULT_MODULUS};
use vanet_ibgs::ibgs::{
    check_individual_modified, verify_individual_original, Deployment, FULL_SIGNATURE_ELEMENTS,
    MODIFIED_SIGNATURE_ELEMENTS,
};

fn main() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let ctx = make_transparent_context(1, DEFAULT_MODULUS).expect("valid modulus");
    let dep = Deployment::new(ctx, 2, 2, &mut rng);
    let params = &dep.params;
    let opener = &dep.opener.id;

    let msg = b"icy road at km 12";
    let sig = dep.sign(0, msg, &mut rng);
    let manager = &dep.manager_of(0).id;

    params.ctx.reset_pairing_count();
    let ok = verify_individual_original(params, &sig, msg, opener, manager);
    println!("full signature:     {ok}, {} pairings", params.ctx.pairing_count());

    let short = sig.to_modified();
    params.ctx.reset_pairing_count();
    let ok = check_individual_modified(params, &short, msg, opener, manager);
    println!("modified signature: {ok:?}, {} pairings", params.ctx.pairing_count());

    println!(
        "elements: {FULL_SIGNATURE_ELEMENTS} -> {MODIFIED_SIGNATURE_ELEMENTS}, bytes: {} -> {}",
        sig.to_bytes().len(),
        short.to_bytes().len()
    );

    // Same message, other vehicle in another group: the two signatures share
    // no visible element, and the wrong manager identity fails verification.
    let other = dep.sign(1, msg, &mut rng).to_modified();
    assert_ne!(other.blinded.identity, short.blinded.identity);
    let wrong = check_individual_modified(params, &other, msg, opener, manager);
    println!("other group under the wrong manager: {wrong:?}");

    let tampered = check_individual_modified(params, &short, b"clear road", opener, manager);
    println!("tampered message: {tampered:?}");
}
