"""From-scratch LSTM classifier: parameters, kernels glue, training loop."""
