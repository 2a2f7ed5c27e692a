//! Finite-difference validation of every differentiable op and of the
//! six full architectures. Inputs are sampled away from ReLU/modulus
//! kinks so central differences are trustworthy at h = 1e-6.

use std::rc::Rc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cvnn_core::ctensor::{ComplexTensor, Padding, RealTensor};
use cvnn_core::grad::{check_gradients, finite_difference_check, Tape, Value, VarId};
use cvnn_core::models::{build, real_equivalent, ModelSpec};
use cvnn_core::nn::loss::one_hot;
use cvnn_core::nn::{Network, RealFn};
use cvnn_core::polsar::Representation;
use cvnn_core::Result;

const H: f64 = 1e-6;
const TOL: f64 = 1e-4;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random complex tensor with plane values bounded away from zero.
fn off_kink_c(rng: &mut ChaCha8Rng, shape: &[usize]) -> Value {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let sr: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let si: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
            c(
                sr * rng.random_range(0.2..1.2),
                si * rng.random_range(0.2..1.2),
            )
        })
        .collect();
    Value::C(ComplexTensor::from_vec(shape, data).unwrap())
}

fn off_kink_r(rng: &mut ChaCha8Rng, shape: &[usize]) -> Value {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let s: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
            s * rng.random_range(0.2..1.2)
        })
        .collect();
    Value::R(RealTensor::from_vec(shape, data).unwrap())
}

fn assert_passes(name: &str, err: f64) {
    assert!(err < TOL, "{name}: max relative error {err}");
}

#[test]
fn matmul_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = off_kink_c(&mut rng, &[3, 4]);
    let b = off_kink_c(&mut rng, &[4, 2]);
    let err = check_gradients(
        |tape, ids| {
            let y = tape.matmul(ids[0], ids[1])?;
            Ok(tape.sum_abs2(y))
        },
        &[a, b],
        H,
        None,
        0,
    )
    .unwrap();
    assert_passes("matmul complex", err.max_rel_err);

    let a = off_kink_r(&mut rng, &[3, 4]);
    let b = off_kink_r(&mut rng, &[4, 2]);
    let err = check_gradients(
        |tape, ids| {
            let y = tape.matmul(ids[0], ids[1])?;
            Ok(tape.sum_abs2(y))
        },
        &[a, b],
        H,
        None,
        1,
    )
    .unwrap();
    assert_passes("matmul real", err.max_rel_err);
}

#[test]
fn conv2d_gradients_both_paddings() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for pad in [Padding::Valid, Padding::Same] {
        let x = off_kink_c(&mut rng, &[2, 5, 6, 2]);
        let k = off_kink_c(&mut rng, &[3, 3, 2, 3]);
        let err = check_gradients(
            |tape, ids| {
                let y = tape.conv2d(ids[0], ids[1], pad)?;
                Ok(tape.sum_abs2(y))
            },
            &[x, k],
            H,
            Some(40),
            3,
        )
        .unwrap();
        assert_passes("conv2d complex", err.max_rel_err);

        let x = off_kink_r(&mut rng, &[2, 5, 6, 2]);
        let k = off_kink_r(&mut rng, &[3, 3, 2, 3]);
        let err = check_gradients(
            |tape, ids| {
                let y = tape.conv2d(ids[0], ids[1], pad)?;
                Ok(tape.sum_abs2(y))
            },
            &[x, k],
            H,
            Some(40),
            4,
        )
        .unwrap();
        assert_passes("conv2d real", err.max_rel_err);
    }
}

#[test]
fn elementwise_and_channel_op_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = off_kink_c(&mut rng, &[4, 3]);
    let v = off_kink_c(&mut rng, &[3]);
    let err = check_gradients(
        |tape, ids| {
            let y = tape.add_chan(ids[0], ids[1])?;
            let z = tape.mul_elem(y, y)?;
            Ok(tape.sum_abs2(z))
        },
        &[x, v],
        H,
        None,
        5,
    )
    .unwrap();
    assert_passes("add_chan + mul_elem complex", err.max_rel_err);

    let x = off_kink_r(&mut rng, &[6, 2]);
    let v = off_kink_r(&mut rng, &[2]);
    let err = check_gradients(
        |tape, ids| {
            let y = tape.mul_chan(ids[0], ids[1])?;
            let m = tape.mean_chan(y)?;
            Ok(tape.sum_abs2(m))
        },
        &[x, v],
        H,
        None,
        6,
    )
    .unwrap();
    assert_passes("mul_chan + mean_chan", err.max_rel_err);
}

#[test]
fn scalar_chain_gradients() {
    // sqrt, div, scale, add_const, neg, sub through a smooth chain.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = Value::R(RealTensor::from_vec(&[4], (0..4).map(|_| rng.random_range(0.5..2.0)).collect()).unwrap());
    let b = Value::R(RealTensor::from_vec(&[4], (0..4).map(|_| rng.random_range(0.5..2.0)).collect()).unwrap());
    let err = check_gradients(
        |tape, ids| {
            let s = tape.add_const(ids[0], 0.7)?;
            let q = tape.sqrt(s)?;
            let d = tape.div(q, ids[1])?;
            let n = tape.neg(d);
            let t = tape.sub(n, ids[1])?;
            let u = tape.scale(t, -1.3);
            Ok(tape.sum_abs2(u))
        },
        &[a, b],
        H,
        None,
        7,
    )
    .unwrap();
    assert_passes("scalar chain", err.max_rel_err);
}

#[test]
fn activation_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let z = off_kink_c(&mut rng, &[5, 4]);
    for (fr, fi) in [
        (RealFn::Relu, RealFn::Relu),
        (RealFn::Tanh, RealFn::Tanh),
        (RealFn::Sigmoid, RealFn::Identity),
    ] {
        let err = check_gradients(
            |tape, ids| {
                let y = tape.act_a(ids[0], fr, fi)?;
                Ok(tape.sum_abs2(y))
            },
            std::slice::from_ref(&z),
            H,
            None,
            8,
        )
        .unwrap();
        assert_passes("type-A", err.max_rel_err);
    }

    let x = off_kink_r(&mut rng, &[5, 4]);
    for f in [RealFn::Relu, RealFn::Tanh, RealFn::Sigmoid] {
        let err = check_gradients(
            |tape, ids| {
                let y = tape.act_r(ids[0], f)?;
                Ok(tape.sum_abs2(y))
            },
            std::slice::from_ref(&x),
            H,
            None,
            9,
        )
        .unwrap();
        assert_passes("real activation", err.max_rel_err);
    }
}

#[test]
fn type_b_activation_gradients() {
    // Magnitudes well off zero; phases clear of the branch cut so the
    // phase function stays differentiable under the probe.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let data: Vec<Complex64> = (0..20)
        .map(|_| {
            let m = rng.random_range(0.3..1.4);
            let th = rng.random_range(-2.8..2.8f64);
            c(m * th.cos(), m * th.sin())
        })
        .collect();
    let z = Value::C(ComplexTensor::from_vec(&[4, 5], data).unwrap());
    for (fr, fp) in [
        (RealFn::Relu, RealFn::Identity),
        (RealFn::Tanh, RealFn::Tanh),
        (RealFn::Sigmoid, RealFn::Tanh),
    ] {
        let err = check_gradients(
            |tape, ids| {
                let y = tape.act_b(ids[0], fr, fp)?;
                let probe = Rc::new(Value::C(ComplexTensor::from_vec(
                    &[4, 5],
                    (0..20).map(|i| c(0.3 + 0.01 * i as f64, -0.2)).collect(),
                )?));
                tape.probe_sum(y, probe)
            },
            std::slice::from_ref(&z),
            H,
            None,
            10,
        )
        .unwrap();
        assert_passes("type-B", err.max_rel_err);
    }
}

#[test]
fn softmax_and_loss_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let z = off_kink_c(&mut rng, &[6, 4]);
    let labels: Vec<usize> = (0..6).map(|_| rng.random_range(0..4)).collect();
    let target = Rc::new(one_hot(&labels, 4).unwrap());
    let weights = Rc::new(vec![1.0 / 6.0; 6]);
    let err = check_gradients(
        |tape, ids| {
            let y = tape.softmax_last(ids[0])?;
            tape.ace_loss(y, target.clone(), weights.clone())
        },
        &[z],
        H,
        None,
        11,
    )
    .unwrap();
    assert_passes("softmax + ace complex", err.max_rel_err);

    let z = off_kink_r(&mut rng, &[6, 4]);
    let err = check_gradients(
        |tape, ids| {
            let y = tape.softmax_last(ids[0])?;
            tape.ace_loss(y, target.clone(), weights.clone())
        },
        &[z],
        H,
        None,
        12,
    )
    .unwrap();
    assert_passes("softmax + cce real", err.max_rel_err);

    // Nonuniform row weights (weighted loss path).
    let z = off_kink_c(&mut rng, &[6, 4]);
    let w: Vec<f64> = (0..6).map(|i| (i as f64 + 1.0) / 21.0).collect();
    let w = Rc::new(w);
    let err = check_gradients(
        |tape, ids| {
            let y = tape.softmax_last(ids[0])?;
            tape.ace_loss(y, target.clone(), w.clone())
        },
        &[z],
        H,
        None,
        13,
    )
    .unwrap();
    assert_passes("weighted ace", err.max_rel_err);
}

#[test]
fn pooling_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let x = off_kink_c(&mut rng, &[1, 6, 6, 2]);
    let err = check_gradients(
        |tape, ids| {
            let (y, _) = tape.max_pool(ids[0])?;
            Ok(tape.sum_abs2(y))
        },
        std::slice::from_ref(&x),
        H,
        None,
        14,
    )
    .unwrap();
    assert_passes("max pool modulus", err.max_rel_err);

    let err = check_gradients(
        |tape, ids| {
            let shape = tape.value(ids[0]).shape().to_vec();
            let (y, locs) = tape.max_pool(ids[0])?;
            let up = tape.max_unpool(y, locs, &shape)?;
            Ok(tape.sum_abs2(up))
        },
        std::slice::from_ref(&x),
        H,
        None,
        15,
    )
    .unwrap();
    assert_passes("pool + unpool", err.max_rel_err);

    let err = check_gradients(
        |tape, ids| {
            let y = tape.avg_pool(ids[0])?;
            Ok(tape.sum_abs2(y))
        },
        &[x],
        H,
        None,
        16,
    )
    .unwrap();
    assert_passes("avg pool", err.max_rel_err);

    let x = off_kink_r(&mut rng, &[1, 6, 6, 2]);
    let err = check_gradients(
        |tape, ids| {
            let (y, _) = tape.max_pool(ids[0])?;
            Ok(tape.sum_abs2(y))
        },
        &[x],
        H,
        None,
        17,
    )
    .unwrap();
    assert_passes("max pool real", err.max_rel_err);
}

#[test]
fn magnitude_softmax_gradients() {
    // |z| off zero, then real softmax and a cross-entropy head.
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let z = off_kink_c(&mut rng, &[5, 3]);
    let labels: Vec<usize> = (0..5).map(|_| rng.random_range(0..3)).collect();
    let target = Rc::new(one_hot(&labels, 3).unwrap());
    let weights = Rc::new(vec![1.0 / 5.0; 5]);
    let err = check_gradients(
        |tape, ids| {
            let m = tape.modulus(ids[0])?;
            let y = tape.softmax_last(m)?;
            tape.ace_loss(y, target.clone(), weights.clone())
        },
        &[z],
        H,
        None,
        45,
    )
    .unwrap();
    assert_passes("magnitude softmax", err.max_rel_err);
}

#[test]
fn dropout_mask_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let x = off_kink_c(&mut rng, &[4, 5]);
    let mask = Rc::new(
        cvnn_core::nn::dropout::dropout_mask(&[4, 5], 0.5, &mut rng).unwrap(),
    );
    let err = check_gradients(
        |tape, ids| {
            let y = tape.mul_mask(ids[0], mask.clone())?;
            Ok(tape.sum_abs2(y))
        },
        &[x],
        H,
        None,
        18,
    )
    .unwrap();
    assert_passes("dropout mask", err.max_rel_err);
}

#[test]
fn batchnorm_gradients() {
    use cvnn_core::nn::batchnorm::{complex_bn_graph, real_bn_graph, BnComplex, BnComplexParams, BnReal};
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    // Complex BN in training mode: params are x, the four scales and shift.
    let x = off_kink_c(&mut rng, &[8, 3]);
    let srr = off_kink_r(&mut rng, &[3]);
    let sri = off_kink_r(&mut rng, &[3]);
    let sir = off_kink_r(&mut rng, &[3]);
    let sii = off_kink_r(&mut rng, &[3]);
    let shift = off_kink_c(&mut rng, &[3]);
    let err = finite_difference_check(
        |vals: &[Value]| -> Result<f64> {
            let mut tape = Tape::new();
            let ids: Vec<VarId> = vals.iter().map(|v| tape.param(v.clone())).collect();
            let mut state = BnComplex::new(3);
            let p = BnComplexParams {
                scale_rr: ids[1],
                scale_ri: ids[2],
                scale_ir: ids[3],
                scale_ii: ids[4],
                shift: ids[5],
            };
            let y = complex_bn_graph(&mut tape, ids[0], &p, &mut state, true)?;
            let l = tape.sum_abs2(y);
            Ok(tape.value(l).as_real()?.data()[0])
        },
        &{
            let mut tape = Tape::new();
            let vals = [x.clone(), srr.clone(), sri.clone(), sir.clone(), sii.clone(), shift.clone()];
            let ids: Vec<VarId> = vals.iter().map(|v| tape.param(v.clone())).collect();
            let mut state = BnComplex::new(3);
            let p = BnComplexParams {
                scale_rr: ids[1],
                scale_ri: ids[2],
                scale_ir: ids[3],
                scale_ii: ids[4],
                shift: ids[5],
            };
            let y = complex_bn_graph(&mut tape, ids[0], &p, &mut state, true).unwrap();
            let l = tape.sum_abs2(y);
            let grads = tape.backward(l).unwrap();
            ids.iter().map(|&i| grads.get(i).unwrap().clone()).collect::<Vec<_>>()
        },
        &[x, srr, sri, sir, sii, shift],
        H,
        Some(24),
        19,
    )
    .unwrap();
    assert_passes("complex batch norm", err.max_rel_err);

    // Real BN.
    let x = off_kink_r(&mut rng, &[10, 2]);
    let scale = off_kink_r(&mut rng, &[2]);
    let shift = off_kink_r(&mut rng, &[2]);
    let err = check_gradients(
        |tape, ids| {
            let mut state = BnReal::new(2);
            let y = real_bn_graph(tape, ids[0], ids[1], ids[2], &mut state, true)?;
            Ok(tape.sum_abs2(y))
        },
        &[x, scale, shift],
        H,
        None,
        20,
    )
    .unwrap();
    assert_passes("real batch norm", err.max_rel_err);
}

/// Full-network finite-difference check: perturbs every parameter (and
/// the input), rebuilding the forward pass per probe.
fn check_network(
    net: &Network,
    input: Value,
    labels: Vec<usize>,
    classes: usize,
    training: bool,
    cap: usize,
    seed: u64,
) -> f64 {
    let target = Rc::new(one_hot(&labels, classes).unwrap());
    let rows = labels.len();
    let weights = Rc::new(vec![1.0 / rows as f64; rows]);

    let forward = |net: &mut Network, vals: &[Value]| -> Result<(Tape, VarId, Vec<VarId>)> {
        let mut tape = Tape::new();
        let input_id = tape.param(vals[0].clone());
        // Install the perturbed parameter values.
        let mut idx = 1;
        net.update_params(&mut |slot| {
            *slot = vals[idx].clone();
            idx += 1;
        });
        let mut rng = ChaCha8Rng::seed_from_u64(9999);
        let fwd = net.forward(&mut tape, input_id, training, &mut rng)?;
        let flat = tape.reshape(fwd.output, &[rows, classes])?;
        let loss = tape.ace_loss(flat, target.clone(), weights.clone())?;
        let mut ids = vec![input_id];
        ids.extend(fwd.params);
        Ok((tape, loss, ids))
    };

    // Parameter vector: input first, then the network's parameters.
    let mut params = vec![input];
    {
        let mut tmp = Vec::new();
        for layer in &net.layers {
            layer.for_each_param(&mut |v| tmp.push(v.clone()));
        }
        params.extend(tmp);
    }

    let analytic: Vec<Value> = {
        let mut work = net.clone();
        let (tape, loss, ids) = forward(&mut work, &params).unwrap();
        let grads = tape.backward(loss).unwrap();
        ids.iter().map(|&i| grads.get(i).unwrap().clone()).collect()
    };

    let eval = |vals: &[Value]| -> Result<f64> {
        let mut work = net.clone();
        let (tape, loss, _) = forward(&mut work, vals)?;
        Ok(tape.value(loss).as_real()?.data()[0])
    };

    finite_difference_check(eval, &analytic, &params, H, Some(cap), seed)
        .unwrap()
        .max_rel_err
}

#[test]
fn full_mlp_models_pass_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut spec = ModelSpec::cv_mlp(Representation::Coherency, 4);
    spec.patch_size = 4; // keep the probe affordable
    let cv = build(&spec, &mut rng).unwrap();
    let input = off_kink_c(&mut rng, &[3, 4, 4, 6]);
    let err = check_network(&cv, input, vec![0, 2, 3], 4, true, 6, 31);
    assert_passes("cv-mlp", err);

    let rspec = real_equivalent(&spec).unwrap();
    let rv = build(&rspec, &mut rng).unwrap();
    let input = off_kink_r(&mut rng, &[3, 4, 4, 9]);
    let err = check_network(&rv, input, vec![1, 2, 0], 4, true, 6, 32);
    assert_passes("rv-mlp", err);
}

#[test]
fn full_cnn_models_pass_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let spec = ModelSpec::cv_cnn(Representation::Coherency, 4);
    let cv = build(&spec, &mut rng).unwrap();
    let input = off_kink_c(&mut rng, &[2, 12, 12, 6]);
    let err = check_network(&cv, input, vec![0, 3], 4, false, 6, 34);
    assert_passes("cv-cnn", err);

    let rspec = real_equivalent(&spec).unwrap();
    let rv = build(&rspec, &mut rng).unwrap();
    let input = off_kink_r(&mut rng, &[2, 12, 12, 9]);
    let err = check_network(&rv, input, vec![2, 1], 4, false, 6, 35);
    assert_passes("rv-cnn", err);
}

#[test]
fn full_fcnn_models_pass_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let mut spec = ModelSpec::cv_fcnn(Representation::Pauli, 3);
    spec.patch_size = 32;
    spec.hidden = vec![2, 3, 4, 4, 4, 4];
    let cv = build(&spec, &mut rng).unwrap();
    // Batch of two so the bottleneck batch norm sees enough samples.
    let input = off_kink_c(&mut rng, &[2, 32, 32, 3]);
    let labels: Vec<usize> = (0..2 * 32 * 32).map(|i| i % 3).collect();
    let err = check_network(&cv, input, labels.clone(), 3, true, 3, 37);
    assert_passes("cv-fcnn", err);

    let rspec = real_equivalent(&spec).unwrap();
    let rv = build(&rspec, &mut rng).unwrap();
    let input = off_kink_r(&mut rng, &[2, 32, 32, 6]);
    let err = check_network(&rv, input, labels, 3, true, 3, 38);
    assert_passes("rv-fcnn", err);
}

#[test]
fn gradient_linearity_and_unused_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let a = off_kink_c(&mut rng, &[3, 3]);
    let b = off_kink_c(&mut rng, &[3, 3]);

    // grad of (L1 + L2) == grad L1 + grad L2.
    let mut tape = Tape::new();
    let ia = tape.param(a.clone());
    let ib = tape.param(b.clone());
    let l1 = tape.sum_abs2(ia);
    let prod = tape.mul_elem(ia, ib).unwrap();
    let l2 = tape.sum_abs2(prod);
    let lsum = tape.add(l1, l2).unwrap();
    let g_sum = tape.backward(lsum).unwrap();
    let g1 = tape.backward(l1).unwrap();
    let g2 = tape.backward(l2).unwrap();
    let ga_sum = g_sum.get(ia).unwrap().as_complex().unwrap().clone();
    let ga_1 = g1.get(ia).unwrap().as_complex().unwrap().clone();
    let ga_2 = g2.get(ia).unwrap().as_complex().unwrap().clone();
    for i in 0..ga_sum.len() {
        let want = ga_1.data()[i] + ga_2.data()[i];
        assert!((ga_sum.data()[i] - want).norm() < 1e-10);
    }

    // A parameter with no path to the loss reports a zero gradient.
    let unused = g1.get(ib).unwrap().as_complex().unwrap().clone();
    assert!(unused.data().iter().all(|z| *z == c(0.0, 0.0)));
}

#[test]
fn gradients_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let x = off_kink_c(&mut rng, &[4, 4]);
    let run = || {
        let mut tape = Tape::new();
        let id = tape.param(x.clone());
        let s = tape.softmax_last(id).unwrap();
        let l = tape.sum_abs2(s);
        let g = tape.backward(l).unwrap();
        format!("{:?}", g.get(id).unwrap())
    };
    assert_eq!(run(), run());
}
