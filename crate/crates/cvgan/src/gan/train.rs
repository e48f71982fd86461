//! Alternating semi-supervised training loop.
//!
//! Per mini-batch: (1) generate fakes and update the discriminator on the
//! combined labeled/unlabeled/fake batch; (2) resample latents and update
//! the generator against the frozen discriminator. Supervised mode drops
//! the generator and the unlabeled/generated terms entirely.

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ctensor::ComplexTensor;
use crate::error::{Error, Result};
use crate::layers::Mode;

use super::adam::{AdamHyper, AdamState};
use super::discriminator::Discriminator;
use super::generator::Generator;
use super::loss::{discriminator_loss, generator_loss_and_grad, LossBreakdown};
use super::{TrainMode, TrainingConfig};

/// Training pools. Labels are 1..=K; unlabeled patches carry no label.
pub struct TrainInputs<'a> {
    pub labeled: &'a [(ComplexTensor, usize)],
    pub unlabeled: &'a [ComplexTensor],
}

/// Networks plus optimizer state after a run.
pub struct TrainedModel {
    pub config: TrainingConfig,
    pub discriminator: Discriminator,
    pub generator: Option<Generator>,
    pub adam_d: AdamState,
    pub adam_g: Option<AdamState>,
    pub epoch_log: Vec<LossBreakdown>,
}

/// Independent standard-normal latents on both planes: [B, width].
pub fn sample_latents<R: Rng>(rng: &mut R, batch: usize, width: usize) -> ComplexTensor {
    let mut z = ComplexTensor::zeros(&[batch, width]);
    for v in z.re.iter_mut() {
        *v = rng.sample(rand_distr::StandardNormal);
    }
    for v in z.im.iter_mut() {
        *v = rng.sample(rand_distr::StandardNormal);
    }
    z
}

/// Stacks [C, H, W] patches into one [B, C, H, W] batch.
pub fn stack_batch(items: &[&ComplexTensor]) -> Result<ComplexTensor> {
    if items.is_empty() {
        return Err(Error::EmptySample {
            what: "batch assembly",
        });
    }
    let re_views: Vec<_> = items.iter().map(|t| t.re.view()).collect();
    let im_views: Vec<_> = items.iter().map(|t| t.im.view()).collect();
    let re = ndarray::stack(Axis(0), &re_views).map_err(|_| Error::ShapeMismatch {
        left: items[0].shape().to_vec(),
        right: items.last().unwrap().shape().to_vec(),
    })?;
    let im = ndarray::stack(Axis(0), &im_views).expect("planes share shapes");
    Ok(ComplexTensor { re, im })
}

fn concat_groups(groups: &[&ComplexTensor]) -> ComplexTensor {
    let non_empty: Vec<_> = groups.iter().filter(|g| g.shape()[0] > 0).collect();
    let re_views: Vec<_> = non_empty.iter().map(|g| g.re.view()).collect();
    let im_views: Vec<_> = non_empty.iter().map(|g| g.im.view()).collect();
    ComplexTensor {
        re: ndarray::concatenate(Axis(0), &re_views).expect("compatible shapes"),
        im: ndarray::concatenate(Axis(0), &im_views).expect("compatible shapes"),
    }
}

/// Runs the configured training loop. Deterministic given the config seed.
pub fn train(config: &TrainingConfig, inputs: &TrainInputs<'_>) -> Result<TrainedModel> {
    config.validate()?;
    if inputs.labeled.is_empty() {
        return Err(Error::EmptyLabeledSet);
    }
    let mut class_seen = vec![false; config.k];
    for (patch, label) in inputs.labeled {
        if *label < 1 || *label > config.k {
            return Err(Error::LabelOutOfRange {
                label: *label as i64,
                k: config.k,
            });
        }
        class_seen[*label - 1] = true;
        let expect = [config.in_channels, config.patch_size, config.patch_size];
        if patch.shape() != expect {
            return Err(Error::ShapeMismatch {
                left: patch.shape().to_vec(),
                right: expect.to_vec(),
            });
        }
    }
    if let Some(missing) = class_seen.iter().position(|seen| !seen) {
        return Err(Error::ClassMissing { class: missing + 1 });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut discriminator = Discriminator::new(
        &mut rng,
        config.in_channels,
        &config.d_channels,
        config.k,
        config.patch_size,
        config.m,
    )?;
    let semisup = config.mode == TrainMode::Semisup;
    let mut generator = if semisup {
        Some(Generator::new(
            &mut rng,
            config.latent_width,
            &config.g_channels,
            config.in_channels,
            config.patch_size,
            config.m,
        )?)
    } else {
        None
    };

    let hyper = AdamHyper::new(config.lr, config.beta1, config.beta2);
    let mut adam_d = AdamState::new(hyper, &discriminator.param_lens());
    let mut adam_g = generator
        .as_ref()
        .map(|g| AdamState::new(hyper, &g.param_lens()));

    let mut epoch_log = Vec::with_capacity(config.epochs);
    let mut order: Vec<usize> = (0..inputs.labeled.len()).collect();

    for _epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut sums = LossBreakdown::default();
        let mut steps = 0usize;

        for chunk in order.chunks(config.batch_size) {
            // A lone labeled sample cannot carry batch statistics on its own.
            if !semisup && chunk.len() < 2 {
                continue;
            }
            let labeled_refs: Vec<&ComplexTensor> =
                chunk.iter().map(|&i| &inputs.labeled[i].0).collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| inputs.labeled[i].1).collect();
            let labeled_x = stack_batch(&labeled_refs)?;
            let b_l = labeled_x.shape()[0];

            let (unlabeled_x, b_u, fake_x, b_f) = if semisup {
                let take = config.batch_size.min(inputs.unlabeled.len());
                let unlabeled_x = if take > 0 {
                    let idx = rand::seq::index::sample(&mut rng, inputs.unlabeled.len(), take);
                    let refs: Vec<&ComplexTensor> =
                        idx.iter().map(|i| &inputs.unlabeled[i]).collect();
                    stack_batch(&refs)?
                } else {
                    ComplexTensor::zeros(&[
                        0,
                        config.in_channels,
                        config.patch_size,
                        config.patch_size,
                    ])
                };
                let g = generator.as_mut().expect("semisup has a generator");
                let z = sample_latents(&mut rng, config.batch_size, config.latent_width);
                let (fake, _) = g.forward(&z, Mode::Train)?;
                let b_f = fake.shape()[0];
                (unlabeled_x, take, fake, b_f)
            } else {
                let empty = ComplexTensor::zeros(&[
                    0,
                    config.in_channels,
                    config.patch_size,
                    config.patch_size,
                ]);
                (empty.clone(), 0, empty, 0)
            };

            // Discriminator step over the combined batch.
            let combined = concat_groups(&[&labeled_x, &unlabeled_x, &fake_x]);
            let (logits, cache) = discriminator.forward(&combined, Mode::Train)?;
            let (mut breakdown, g_lab, g_unl, g_fak) = discriminator_loss(
                logits.slice(s![..b_l, ..]),
                &labels,
                logits.slice(s![b_l..b_l + b_u, ..]),
                logits.slice(s![b_l + b_u.., ..]),
            )?;
            let mut dlogits = Array2::<f64>::zeros(logits.dim());
            dlogits.slice_mut(s![..b_l, ..]).assign(&g_lab);
            dlogits.slice_mut(s![b_l..b_l + b_u, ..]).assign(&g_unl);
            dlogits.slice_mut(s![b_l + b_u.., ..]).assign(&g_fak);
            let (d_grads, _) = discriminator.backward(&cache, &dlogits);
            adam_d.step(&mut discriminator.params_mut(), &d_grads.flat())?;
            debug_assert_eq!(b_l + b_u + b_f, logits.nrows());

            // Generator step against the frozen discriminator.
            if let (Some(g), Some(adam_g)) = (generator.as_mut(), adam_g.as_mut()) {
                let z = sample_latents(&mut rng, config.batch_size, config.latent_width);
                let (fake, g_cache) = g.forward(&z, Mode::Train)?;
                let (fake_logits, d_cache) = discriminator.forward(&fake, Mode::Eval)?;
                let (l_generator, dflogits) = generator_loss_and_grad(fake_logits.view());
                let (_, dfake) = discriminator.backward(&d_cache, &dflogits);
                let g_grads = g.backward(&g_cache, &dfake);
                adam_g.step(&mut g.params_mut(), &g_grads.flat())?;
                breakdown.l_generator = l_generator;
            }

            sums.l_labeled += breakdown.l_labeled;
            sums.l_unlabeled += breakdown.l_unlabeled;
            sums.l_generated += breakdown.l_generated;
            sums.l_total += breakdown.l_total;
            sums.l_generator += breakdown.l_generator;
            steps += 1;
        }

        let n = steps.max(1) as f64;
        epoch_log.push(LossBreakdown {
            l_labeled: sums.l_labeled / n,
            l_unlabeled: sums.l_unlabeled / n,
            l_generated: sums.l_generated / n,
            l_total: sums.l_total / n,
            l_generator: sums.l_generator / n,
        });
    }

    Ok(TrainedModel {
        config: config.clone(),
        discriminator,
        generator,
        adam_d,
        adam_g,
        epoch_log,
    })
}

/// Classifies patches by argmax over the K class logits (fake logit
/// excluded), in inference mode. Returns labels in 1..=K.
pub fn predict_classes(
    discriminator: &mut Discriminator,
    patches: &[ComplexTensor],
    batch_size: usize,
) -> Result<Vec<usize>> {
    let k = discriminator.k();
    let mut out = Vec::with_capacity(patches.len());
    for chunk in patches.chunks(batch_size.max(1)) {
        let refs: Vec<&ComplexTensor> = chunk.iter().collect();
        let x = stack_batch(&refs)?;
        let (logits, _) = discriminator.forward(&x, Mode::Eval)?;
        for row in logits.rows() {
            let mut best = 0;
            for j in 1..k {
                if row[j] > row[best] {
                    best = j;
                }
            }
            out.push(best + 1);
        }
    }
    Ok(out)
}
