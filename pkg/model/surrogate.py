import torch


class SigmoidSurrogateSpike(torch.autograd.Function):
    """
    Heaviside spike on x >= 0 in the forward pass.
    Backward: slope * sigma'(slope * x), sigma the logistic function.
    """

    @staticmethod
    def forward(ctx, input, slope):
        ctx.save_for_backward(input)
        ctx.slope = slope
        return input.ge(0).to(input.dtype)

    @staticmethod
    def backward(ctx, grad_output):
        input, = ctx.saved_tensors
        sg = torch.sigmoid(input * ctx.slope)
        return grad_output * sg * (1.0 - sg) * ctx.slope, None


def spike_fn(x, slope=10.0):
    return SigmoidSurrogateSpike.apply(x, slope)
