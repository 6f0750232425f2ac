"""SNN simulation, quantization-aware STDP and budgeted model selection."""
