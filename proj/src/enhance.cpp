#include "gdse/enhance.hpp"

#include "gdse/errors.hpp"
#include "gdse/wav.hpp"

namespace gdse {

namespace {

struct Prepared {
  Waveform original;
  Waveform at_rate;
  double gain = 1.0;
  ComplexSpectrogram y;
};

Prepared prepare(const Waveform& noisy, const LoadedCheckpoint& ck) {
  noisy.validate();
  if (noisy.samples.empty()) throw DegenerateInputError("enhance: empty input");
  Prepared p;
  p.original = noisy;
  p.at_rate = noisy.sample_rate == ck.meta.sample_rate ? noisy : resample(noisy, ck.meta.sample_rate);
  auto [norm, gain] = normalize(p.at_rate);
  p.gain = gain;
  p.at_rate = std::move(norm);
  p.y = compress(stft(p.at_rate, ck.meta.spectral));
  return p;
}

EnhanceResult finish(const Prepared& p, const Mask& mask, const LoadedCheckpoint& ck, const SamplerConfig& cfg) {
  const NoiseSchedule sch = NoiseSchedule::geometric(ck.meta.schedule);
  const ReverseResult r = enhance_spectrogram(p.y.values, mask, ck.model.denoiser, sch, cfg);

  EnhanceResult out;
  out.mask = mask;
  out.prior_state = ComplexSpectrogram{r.prior_state, SpectralDomain::compressed, ck.meta.spectral};
  out.final_state = ComplexSpectrogram{r.final_state, SpectralDomain::compressed, ck.meta.spectral};
  out.steps_used = r.denoiser_calls;
  out.seed = cfg.seed;

  Waveform w = istft(decompress(out.final_state), p.at_rate.size(), ck.meta.sample_rate);
  for (double& s : w.samples) s *= p.gain;
  if (w.sample_rate != p.original.sample_rate) w = resample(w, p.original.sample_rate);
  w.samples.resize(p.original.size(), 0.0);
  out.enhanced = std::move(w);
  return out;
}

}  // namespace

ReverseResult enhance_spectrogram(const ComplexGrid& y, const Mask& mask, const Denoiser& denoiser,
                                  const NoiseSchedule& sch, const SamplerConfig& cfg) {
  const GuidanceField g = guidance_from_mask(mask);
  Rng rng(cfg.seed);
  return run_reverse(y, g, denoiser, sch, cfg, rng);
}

EnhanceResult enhance(const Waveform& noisy, const LoadedCheckpoint& ck, const SamplerConfig& cfg) {
  const Prepared p = prepare(noisy, ck);
  const Mask mask = ck.model.cmen.forward(p.y.values);
  return finish(p, mask, ck, cfg);
}

EnhanceResult enhance_with_oracle_mask(const Waveform& noisy, const Waveform& clean, const LoadedCheckpoint& ck,
                                       const SamplerConfig& cfg) {
  clean.validate();
  if (clean.size() != noisy.size()) throw InvalidInputError("enhance_with_oracle_mask: clean and noisy lengths differ");
  if (clean.sample_rate != noisy.sample_rate)
    throw InvalidInputError("enhance_with_oracle_mask: clean and noisy sample rates differ");
  const Prepared p = prepare(noisy, ck);
  Waveform c = clean.sample_rate == ck.meta.sample_rate ? clean : resample(clean, ck.meta.sample_rate);
  for (double& s : c.samples) s /= p.gain;
  const ComplexSpectrogram x0 = compress(stft(c, ck.meta.spectral));
  return finish(p, phase_sensitive_mask(x0, p.y), ck, cfg);
}

}  // namespace gdse
