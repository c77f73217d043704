//! Model hyperparameters and the learnable-scalar count.

use serde::{Deserialize, Serialize};
use seqmix::{scan_heads, MixerKind, SCAN_STATE_DIM};

use crate::error::ModelError;

/// Number of mel channels the decoder emits.
pub const N_MELS: usize = 80;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(with = "mixer_name")]
    pub mixer: MixerKind,
    pub vocab_size: usize,
    pub n_speakers: usize,
    pub n_languages: usize,
    pub speaker_emb_dim: usize,
    pub language_emb_dim: usize,
    pub enc_hidden: usize,
    pub enc_filter: usize,
    pub enc_blocks: usize,
    pub enc_dropout: f64,
    pub dur_filter: usize,
    pub dec_in: usize,
    pub dec_out: usize,
    pub dec_hidden: usize,
    pub dec_blocks: usize,
    pub time_emb_dim: usize,
}

/// Attention and Fourier mixing keep the wider decoder; the scan layers
/// carry state and use the narrower one.
fn wide_decoder(mixer: MixerKind) -> bool {
    matches!(mixer, MixerKind::SelfAttention | MixerKind::Fnet)
}

impl ModelConfig {
    /// Full-scale dimensions.
    pub fn full(
        mixer: MixerKind,
        vocab_size: usize,
        n_speakers: usize,
        n_languages: usize,
    ) -> Self {
        Self {
            mixer,
            vocab_size,
            n_speakers,
            n_languages,
            speaker_emb_dim: 256,
            language_emb_dim: 192,
            enc_hidden: 640,
            enc_filter: 768,
            enc_blocks: 6,
            enc_dropout: 0.1,
            dur_filter: 256,
            dec_in: 160,
            dec_out: N_MELS,
            dec_hidden: if wide_decoder(mixer) { 256 } else { 192 },
            dec_blocks: 2,
            time_emb_dim: 128,
        }
    }

    /// Desk-scale dimensions: widths divided by eight, two encoder blocks,
    /// mel channel count unchanged.
    pub fn desk(
        mixer: MixerKind,
        vocab_size: usize,
        n_speakers: usize,
        n_languages: usize,
    ) -> Self {
        Self {
            mixer,
            vocab_size,
            n_speakers,
            n_languages,
            speaker_emb_dim: 32,
            language_emb_dim: 24,
            enc_hidden: 80,
            enc_filter: 96,
            enc_blocks: 2,
            enc_dropout: 0.1,
            dur_filter: 32,
            dec_in: 20,
            dec_out: N_MELS,
            dec_hidden: if wide_decoder(mixer) { 32 } else { 24 },
            dec_blocks: 2,
            time_emb_dim: 16,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            self.vocab_size,
            self.n_speakers,
            self.n_languages,
            self.speaker_emb_dim,
            self.language_emb_dim,
            self.enc_hidden,
            self.enc_filter,
            self.enc_blocks,
            self.dur_filter,
            self.dec_in,
            self.dec_out,
            self.dec_hidden,
            self.dec_blocks,
            self.time_emb_dim,
        ];
        if dims.contains(&0) {
            return Err(ModelError::BadConfig("all dimensions must be positive".into()));
        }
        if self.dec_out != N_MELS {
            return Err(ModelError::BadConfig(format!(
                "decoder must emit {N_MELS} mel channels, got {}",
                self.dec_out
            )));
        }
        if self.mixer == MixerKind::SelfAttention
            && (self.enc_hidden % 2 != 0 || self.dec_hidden % 2 != 0)
        {
            return Err(ModelError::BadConfig(
                "attention widths must be divisible by the head count".into(),
            ));
        }
        if self.time_emb_dim % 2 != 0 {
            return Err(ModelError::BadConfig(
                "time embedding width must be even".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.enc_dropout) {
            return Err(ModelError::BadConfig("dropout must be in [0, 1)".into()));
        }
        Ok(())
    }
}

fn linear_params(inp: usize, out: usize) -> usize {
    inp * out + out
}

fn conv_params(inp: usize, out: usize, k: usize) -> usize {
    inp * out * k + out
}

fn mixer_params(kind: MixerKind, dim: usize) -> usize {
    match kind {
        MixerKind::SelfAttention => 4 * linear_params(dim, dim),
        MixerKind::Mamba2 => {
            let h = scan_heads(dim);
            let n = SCAN_STATE_DIM;
            linear_params(dim, 2 * dim)
                + linear_params(dim, h)
                + 2 * linear_params(dim, h * n)
                + linear_params(dim, dim)
        }
        MixerKind::Hydra => {
            let h = scan_heads(dim);
            let n = SCAN_STATE_DIM;
            linear_params(dim, 2 * dim)
                + 2 * (linear_params(dim, h) + 2 * linear_params(dim, h * n))
                + linear_params(dim, dim)
                + dim
        }
        MixerKind::Fnet => 0,
    }
}

fn mix_block_params(kind: MixerKind, dim: usize, filter: usize) -> usize {
    // Two layer norms, the mixer, and the two feed-forward convolutions.
    4 * dim + mixer_params(kind, dim) + conv_params(dim, filter, 3) + conv_params(filter, dim, 3)
}

/// Exact number of learnable scalars for a config, without building the model.
pub fn count_parameters(cfg: &ModelConfig) -> usize {
    let h = cfg.enc_hidden;
    let w = cfg.dec_hidden;

    let token_emb = cfg.vocab_size * h;
    let prenet = 3 * (conv_params(h, h, 5) + 2 * h);
    let enc_blocks = cfg.enc_blocks * mix_block_params(cfg.mixer, h, cfg.enc_filter);
    let mu_proj = linear_params(h, cfg.dec_out);

    let d = cfg.dur_filter;
    let duration = conv_params(h, d, 3) + 2 * d + conv_params(d, d, 3) + 2 * d + linear_params(d, 1);

    let spk = cfg.n_speakers * cfg.speaker_emb_dim;
    let lang = cfg.n_languages * cfg.language_emb_dim;
    let cond_proj = linear_params(h + cfg.speaker_emb_dim + cfg.language_emb_dim, cfg.dec_in);

    let dec_in_proj = linear_params(cfg.dec_out + cfg.dec_in, w);
    let dec_blocks = cfg.dec_blocks
        * (linear_params(cfg.time_emb_dim, w) + mix_block_params(cfg.mixer, w, 4 * w));
    let dec_ln = 2 * w;
    let dec_out_proj = linear_params(w, cfg.dec_out);

    token_emb
        + prenet
        + enc_blocks
        + mu_proj
        + duration
        + spk
        + lang
        + cond_proj
        + dec_in_proj
        + dec_blocks
        + dec_ln
        + dec_out_proj
}

mod mixer_name {
    use super::MixerKind;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(kind: &MixerKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(kind.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<MixerKind, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_counts_sit_in_the_published_bands() {
        let count = |mixer| count_parameters(&ModelConfig::full(mixer, 30, 4, 2)) as f64;
        let attn = count(MixerKind::SelfAttention);
        let mamba = count(MixerKind::Mamba2);
        let hydra = count(MixerKind::Hydra);
        let fnet = count(MixerKind::Fnet);

        let within = |got: f64, center: f64| (got - center).abs() <= 0.15 * center;
        assert!(within(attn, 40e6), "attention {attn}");
        assert!(within(mamba, 38e6), "mamba2 {mamba}");
        assert!(within(hydra, 39e6), "hydra {hydra}");
        assert!(within(fnet, 31e6), "fnet {fnet}");
        assert!(fnet < attn.min(mamba).min(hydra), "fnet must be smallest");
    }

    #[test]
    fn desk_scale_shrinks_at_least_thirty_fold() {
        for mixer in MixerKind::ALL {
            let full = count_parameters(&ModelConfig::full(mixer, 30, 4, 2));
            let desk = count_parameters(&ModelConfig::desk(mixer, 30, 4, 2));
            assert!(
                full >= 30 * desk,
                "{}: {full} vs {desk}",
                mixer.name()
            );
        }
    }

    #[test]
    fn config_survives_a_json_round_trip() {
        let cfg = ModelConfig::desk(MixerKind::Hydra, 12, 3, 2);
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"hydra\""));
        let back: ModelConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let mut cfg = ModelConfig::desk(MixerKind::Fnet, 12, 3, 2);
        cfg.dec_in = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn wrong_mel_channel_count_is_rejected() {
        let mut cfg = ModelConfig::desk(MixerKind::Fnet, 12, 3, 2);
        cfg.dec_out = 64;
        assert!(cfg.validate().is_err());
    }
}
