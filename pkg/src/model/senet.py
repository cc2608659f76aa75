"""The masked asymmetric encoder-decoder segmentation network."""

from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.config.config_models import ModelConfig
from src.errors import ContractError, DimensionError
from src.model.layers import block_forward
from src.model.params import DEFAULT_DECODER, ENCODER_PREFIX, SenetParams, sincos_2d
from src.model.patches import MaskPlan, TokenSequence, make_mask_plan, patchify, unpatchify
from src.tensor import ops
from src.tensor.prng import Prng
from src.tensor.tensor import Tensor, resolve_dtype

ImageLike = Union[Tensor, np.ndarray]
EncodeListener = Callable[[int, MaskPlan], None]


class SenetModel:
    """Shared encoder plus one or more named decoders.

    Single-task and fully shared joint models use one decoder named
    ``decoder``; a model with task-specific decoders names them
    ``decoder_cod`` and ``decoder_sod``.
    """

    def __init__(
        self,
        config: ModelConfig,
        decoders: Sequence[str] = (DEFAULT_DECODER,),
        params: Optional[SenetParams] = None,
    ):
        if not decoders:
            raise ContractError("a model needs at least one decoder")
        self.config = config
        self.decoders = tuple(decoders)
        self.dtype = resolve_dtype(config.dtype)
        self.params = params if params is not None else SenetParams.initialise(config, self.decoders)
        self.enc_pos = sincos_2d(config.enc_dim, config.grid_size).astype(self.dtype)
        self.dec_pos = sincos_2d(config.dec_dim, config.grid_size).astype(self.dtype)
        self._encode_listeners: List[EncodeListener] = []

    # -- routing ---------------------------------------------------------------

    def decoder_for(self, task: Optional[str] = None) -> str:
        """Decoder prefix a task tag routes to."""
        if task is not None and f"decoder_{task}" in self.decoders:
            return f"decoder_{task}"
        if DEFAULT_DECODER in self.decoders:
            return DEFAULT_DECODER
        if task is None and len(self.decoders) == 1:
            return self.decoders[0]
        raise ContractError(f"no decoder serves task {task!r} (have {', '.join(self.decoders)})")

    def encoder_params(self):
        return self.params.with_prefix(ENCODER_PREFIX)

    def decoder_params(self, decoder: str):
        return self.params.with_prefix(decoder)

    def add_encode_listener(self, listener: EncodeListener) -> None:
        """Call ``listener(latent_token_count, plan)`` after every encode."""
        self._encode_listeners.append(listener)

    def remove_encode_listener(self, listener: EncodeListener) -> None:
        self._encode_listeners.remove(listener)

    # -- forward ---------------------------------------------------------------

    def _as_image(self, image: ImageLike) -> Tensor:
        if isinstance(image, Tensor):
            image = image.data
        image = np.asarray(image)
        size = self.config.img_size
        if image.shape != (3, size, size):
            raise DimensionError(f"expected a [3, {size}, {size}] image, got {image.shape}")
        return Tensor(image, dtype=self.dtype)

    def make_plan(self, ratio: float, rng: Optional[Prng] = None) -> MaskPlan:
        return make_mask_plan(self.config.num_patches, ratio, rng)

    def encode(self, image: ImageLike, plan: MaskPlan) -> Tuple[TokenSequence, MaskPlan]:
        """Embed and encode only the visible patches; no class token."""
        cfg = self.config
        if plan.num_tokens != cfg.num_patches:
            raise ContractError(f"plan covers {plan.num_tokens} tokens, model has {cfg.num_patches}")
        patches = patchify(self._as_image(image), cfg.patch_size)
        visible = ops.take_rows(patches, plan.visible)
        x = ops.linear(
            visible,
            self.params[f"{ENCODER_PREFIX}.patch_embed.weight"],
            self.params[f"{ENCODER_PREFIX}.patch_embed.bias"],
        )
        x = x + self.enc_pos[plan.visible]
        for i in range(cfg.enc_depth):
            x = block_forward(
                x,
                self.params,
                f"{ENCODER_PREFIX}.blocks.{i}",
                cfg.enc_heads,
                cfg.patch_size,
                cfg.licm_channels,
                cfg.licm_enabled,
            )
        for listener in self._encode_listeners:
            listener(x.shape[0], plan)
        return TokenSequence(x, plan.visible.copy()), plan

    def decode(
        self,
        latent: TokenSequence,
        plan: MaskPlan,
        decoder: str = DEFAULT_DECODER,
    ) -> Tuple[Tensor, Tensor]:
        """Restore the full token grid and run both heads.

        Returns:
            (reconstruction ``[3, H, W]``, prediction ``[H, W]`` in [0, 1])

        Raises:
            ContractError: if the latent does not match the plan.
        """
        cfg = self.config
        if decoder not in self.decoders:
            raise ContractError(f"unknown decoder {decoder!r}")
        if len(latent) != plan.visible.size or not np.array_equal(latent.positions, plan.visible):
            raise ContractError(
                f"latent holds {len(latent)} tokens but the plan has {plan.visible.size} visible"
            )
        params = self.params
        x = ops.linear(latent.tokens, params[f"{decoder}.embed.weight"], params[f"{decoder}.embed.bias"])
        if plan.masked.size:
            token = ops.reshape(params[f"{decoder}.mask_token"], (1, cfg.dec_dim))
            fill = ops.broadcast_to(token, (plan.masked.size, cfg.dec_dim))
            x = ops.take_rows(ops.concat_rows([x, fill]), plan.restore_order)
        x = x + self.dec_pos
        for i in range(cfg.dec_depth):
            x = block_forward(
                x,
                params,
                f"{decoder}.blocks.{i}",
                cfg.dec_heads,
                cfg.patch_size,
                cfg.licm_channels,
                cfg.licm_enabled,
            )

        p = cfg.patch_size
        recon_tokens = ops.linear(x, params[f"{decoder}.recon_head.weight"], params[f"{decoder}.recon_head.bias"])
        recon = unpatchify(recon_tokens, p, 3)

        trunk = ops.linear(x, params[f"{decoder}.seg_trunk.weight"], params[f"{decoder}.seg_trunk.bias"])
        features = ops.transpose(unpatchify(trunk, p, cfg.head_channels), (1, 2, 0))
        # 1×1 conv: a per-pixel linear map over the head channels.
        logits = ops.linear(features, params[f"{decoder}.seg_conv.weight"], params[f"{decoder}.seg_conv.bias"])
        pred = ops.sigmoid(ops.reshape(logits, (cfg.img_size, cfg.img_size)))
        return recon, pred

    def forward(
        self,
        image: ImageLike,
        plan: MaskPlan,
        decoder: str = DEFAULT_DECODER,
    ) -> Tuple[Tensor, Tensor]:
        latent, plan = self.encode(image, plan)
        return self.decode(latent, plan, decoder)

    def forward_inference(self, image: ImageLike, task: Optional[str] = None) -> np.ndarray:
        """Prediction map with nothing masked; deterministic."""
        plan = self.make_plan(0.0)
        _, pred = self.forward(image, plan, self.decoder_for(task))
        return pred.numpy()
