#pragma once

#include <filesystem>

#include "gdse/spectral.hpp"

namespace gdse {

enum class WavFormat { pcm16, float32 };

// Reads a mono RIFF/WAVE file (16-bit PCM or 32-bit IEEE float).
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& w, WavFormat format = WavFormat::float32);

// Band-limited rate conversion with a Hann-windowed sinc kernel.
Waveform resample(const Waveform& w, int target_rate);

}  // namespace gdse
