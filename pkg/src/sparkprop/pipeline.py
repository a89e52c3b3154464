"""Inference orchestration: content-addressed store, windowed restoration,
and a threaded job engine backing the CLI and HTTP service.

Clips longer than one 33-frame window are processed in windows overlapping
by at least one frame; keyframes route to every window containing them and
overlapping frames cross-fade with linear ramps.  All artifacts are
immutable once stored; job state transitions only queued -> running ->
done/failed.
"""

from __future__ import annotations

import hashlib
import os
import queue
import threading
from dataclasses import dataclass, field, replace

import numpy as np

from .codec import encode
from .conditioning import (
    ORACLE_AUGMENT,
    KeyframeError,
    KeyframeSet,
    PromptMeta,
    ReferenceBundle,
    augment_reference,
    build_sparse_reference,
    select_keyframes,
    validate_keyframes_for_clip,
)
from .degrade import upsample_to
from .denoiser import GuidanceConfig, restore
from .train import load_training_checkpoint
from .video_io import (
    Mp4ParseError,
    parse_mp4_sync_samples,
    read_ppm,
    read_y4m,
    write_y4m,
)

WINDOW = 33
HOP = WINDOW - 1

REF_SOURCES = ("uploaded", "oracle_augmented_gt", "none")


class NotFoundError(KeyError):
    pass


class ConflictError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# content-addressed store


class ContentStore:
    """Immutable blobs addressed by content hash; optional directory backing."""

    def __init__(self, directory: str | None = None):
        self._mem: dict[str, bytes] = {}
        self._dir = directory
        if directory:
            os.makedirs(directory, exist_ok=True)

    def put(self, data: bytes) -> str:
        blob_id = hashlib.sha256(data).hexdigest()[:24]
        if blob_id not in self._mem:
            self._mem[blob_id] = bytes(data)
            if self._dir:
                path = os.path.join(self._dir, blob_id)
                if not os.path.exists(path):
                    tmp = f"{path}.tmp.{os.getpid()}"
                    with open(tmp, "wb") as f:
                        f.write(data)
                    os.replace(tmp, path)
        return blob_id

    def get(self, blob_id: str) -> bytes:
        if blob_id in self._mem:
            return self._mem[blob_id]
        if self._dir:
            path = os.path.join(self._dir, blob_id)
            if os.path.exists(path):
                with open(path, "rb") as f:
                    data = f.read()
                self._mem[blob_id] = data
                return data
        raise NotFoundError(blob_id)

    def has(self, blob_id: str) -> bool:
        try:
            self.get(blob_id)
            return True
        except NotFoundError:
            return False


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    name: str
    frames: int
    height: int
    width: int
    fps: tuple[int, int]
    iframes: tuple[int, ...] = ()


@dataclass(frozen=True)
class ReferenceRecord:
    ref_id: str
    frame_index: int
    height: int
    width: int
    prompt: PromptMeta = PromptMeta()


# ---------------------------------------------------------------------------
# ingestion


def ingest_video(
    store: ContentStore,
    registry: dict[str, VideoRecord],
    data: bytes,
    name: str = "",
    mp4_sidecar: bytes | None = None,
) -> VideoRecord:
    """Store Y4M pixels (plus optional MP4 metadata for sync samples)."""
    video, fps = read_y4m(data)
    iframes: tuple[int, ...] = ()
    if mp4_sidecar is not None:
        iframes = tuple(parse_mp4_sync_samples(mp4_sidecar))
    video_id = store.put(data)
    t, h, w, _ = video.shape
    rec = VideoRecord(video_id, name, t, h, w, fps, iframes)
    existing = registry.get(video_id)
    if existing is not None and existing.iframes and not iframes:
        return existing  # keep richer metadata from an earlier upload
    registry[video_id] = rec
    return rec


def ingest_reference(
    store: ContentStore,
    registry: dict[str, ReferenceRecord],
    ppm_data: bytes,
    frame_index: int,
    task_prompt: str = "",
    content_prompt: str = "",
) -> ReferenceRecord:
    image = read_ppm(ppm_data)
    ref_id = store.put(ppm_data)
    rec = ReferenceRecord(
        ref_id,
        int(frame_index),
        image.shape[0],
        image.shape[1],
        PromptMeta(task_prompt, content_prompt),
    )
    registry[ref_id] = rec
    return rec


# ---------------------------------------------------------------------------
# windowed restoration


def plan_windows(num_frames: int) -> list[int]:
    """Window start offsets covering [0, T) with 33-frame windows.

    Short clips ((T-1) divisible by 4) form a single window of length T.
    """
    if num_frames < 1:
        raise ValueError("empty clip")
    if num_frames <= WINDOW:
        if (num_frames - 1) % 4:
            raise ValueError(
                f"clip of {num_frames} frames needs (T-1) divisible by 4 or at least {WINDOW} frames"
            )
        return [0]
    starts = list(range(0, num_frames - WINDOW + 1, HOP))
    if starts[-1] != num_frames - WINDOW:
        starts.append(num_frames - WINDOW)
    return starts


@dataclass(frozen=True)
class RestoreSpec:
    video_id: str
    keyframes: KeyframeSet
    ref_source: str = "none"  # uploaded | oracle_augmented_gt | none
    refs: dict[int, str] = field(default_factory=dict)  # frame index -> ref_id
    guidance_s: float = 1.0
    gt_video_id: str | None = None  # oracle source only
    oracle_seed: int = 0
    out_scale: int = 1

    def __post_init__(self):
        if self.ref_source not in REF_SOURCES:
            raise ValueError(f"unknown reference source {self.ref_source!r}")
        if self.guidance_s < 0:
            raise ValueError("guidance scale must be nonnegative")
        if self.out_scale < 1:
            raise ValueError("output scale must be >= 1")


class RestoreEngine:
    """Loads a checkpoint once and runs restore jobs against it."""

    def __init__(self, checkpoint_path: str):
        self.checkpoint_path = checkpoint_path
        self.net, self.codec, _, self.meta = load_training_checkpoint(checkpoint_path)

    def gather_references(
        self,
        spec: RestoreSpec,
        video: np.ndarray,
        ref_registry: dict[str, ReferenceRecord],
        store: ContentStore,
        gt_video: np.ndarray | None,
    ) -> ReferenceBundle:
        if spec.ref_source == "none":
            return ReferenceBundle()
        if spec.ref_source == "uploaded":
            images = {}
            prompts = {}
            for frame, ref_id in spec.refs.items():
                rec = ref_registry.get(ref_id)
                if rec is None:
                    raise NotFoundError(f"reference {ref_id} not found")
                images[int(frame)] = read_ppm(store.get(ref_id))
                prompts[int(frame)] = rec.prompt
            return ReferenceBundle(images=images, prompts=prompts)
        if gt_video is None:
            raise ValueError("oracle reference source requires gt_video_id")
        images = {
            k: augment_reference(
                gt_video[k], ORACLE_AUGMENT, np.random.default_rng([spec.oracle_seed, k])
            )
            for k in spec.keyframes
        }
        return ReferenceBundle(images=images)

    def run(
        self,
        spec: RestoreSpec,
        video: np.ndarray,
        refs: ReferenceBundle,
        progress=None,
    ) -> np.ndarray:
        """Windowed guided restoration of a (T, H, W, 3) clip."""
        t = video.shape[0]
        validate_keyframes_for_clip(spec.keyframes, t)

        target_h, target_w = video.shape[1] * spec.out_scale, video.shape[2] * spec.out_scale
        if refs.images:
            ref_h, ref_w = next(iter(refs.images.values())).shape[:2]
            if (ref_h, ref_w) != (target_h, target_w):
                if spec.out_scale != 1:
                    raise ValueError(
                        f"references are {ref_h}x{ref_w} but out_scale implies {target_h}x{target_w}"
                    )
                target_h, target_w = ref_h, ref_w
        fs = self.codec.spatial_factor
        if target_h % fs or target_w % fs:
            raise ValueError(f"target size {target_h}x{target_w} not divisible by {fs}")
        work = upsample_to(video, target_h, target_w)

        starts = plan_windows(t)
        out = np.zeros_like(work)
        weight = np.zeros((t, 1, 1, 1), dtype=np.float32)
        guidance = GuidanceConfig(spec.guidance_s)
        for wi, s0 in enumerate(starts):
            length = min(WINDOW, t)
            frames = work[s0 : s0 + length]
            local_keys = tuple(k - s0 for k in spec.keyframes if s0 <= k < s0 + length)
            local_images = {
                k - s0: refs.images[k] for k in refs.images if s0 <= k < s0 + length
            }
            z_lr = encode(frames, self.codec)
            if local_keys and local_images:
                bundle = ReferenceBundle(images=local_images)
                z_ref = build_sparse_reference(
                    bundle, KeyframeSet(local_keys, spec.keyframes.origin), self.codec,
                    length, target_h, target_w,
                )
            else:
                z_ref = np.zeros_like(z_lr)
            restored = restore(z_lr, z_ref, guidance, self.net, self.codec)
            # cross-fade: linear ramps over the regions shared with neighbors
            ramp = np.ones(length, dtype=np.float32)
            if wi > 0:
                ov = min(max(starts[wi - 1] + WINDOW - s0, 0), length)
                if ov:
                    ramp[:ov] = (np.arange(ov) + 1.0) / (ov + 1.0)
            if wi < len(starts) - 1:
                ov = min(max(s0 + WINDOW - starts[wi + 1], 0), length)
                if ov:
                    ramp[length - ov :] = np.arange(ov, 0, -1.0) / (ov + 1.0)
            out[s0 : s0 + length] += restored * ramp[:, None, None, None]
            weight[s0 : s0 + length] += ramp[:, None, None, None]
            if progress:
                progress((wi + 1) / len(starts))
        return np.clip(out / weight, 0.0, 1.0).astype(np.float32)


# ---------------------------------------------------------------------------
# job engine


@dataclass
class RestoreJob:
    job_id: str
    spec: RestoreSpec
    status: str = "queued"  # queued | running | done | failed
    progress: float = 0.0
    error: str = ""
    result_id: str | None = None

    def snapshot(self) -> dict:
        return {
            "job_id": self.job_id,
            "video_id": self.spec.video_id,
            "keyframes": list(self.spec.keyframes.indices),
            "ref_source": self.spec.ref_source,
            "guidance_s": self.spec.guidance_s,
            "status": self.status,
            "progress": self.progress,
            "error": self.error,
            "result_id": self.result_id,
        }


class JobEngine:
    """Bounded worker pool over a job queue; snapshots never block workers."""

    def __init__(self, engine: RestoreEngine, store: ContentStore, workers: int = 1):
        self.engine = engine
        self.store = store
        self.videos: dict[str, VideoRecord] = {}
        self.references: dict[str, ReferenceRecord] = {}
        self._jobs: dict[str, RestoreJob] = {}
        self._lock = threading.Lock()
        self._queue: queue.Queue[str] = queue.Queue()
        self._workers = [
            threading.Thread(target=self._worker, daemon=True) for _ in range(workers)
        ]
        for w in self._workers:
            w.start()

    # -- ingestion passthroughs

    def add_video(self, data: bytes, name: str = "", mp4_sidecar: bytes | None = None) -> VideoRecord:
        rec = ingest_video(self.store, self.videos, data, name, mp4_sidecar)
        return rec

    def add_reference(self, ppm_data: bytes, frame_index: int, task_prompt="", content_prompt="") -> ReferenceRecord:
        return ingest_reference(
            self.store, self.references, ppm_data, frame_index, task_prompt, content_prompt
        )

    # -- job lifecycle

    def submit(self, spec: RestoreSpec) -> str:
        video = self.videos.get(spec.video_id)
        if video is None:
            raise NotFoundError(f"video {spec.video_id} not found")
        validate_keyframes_for_clip(spec.keyframes, video.frames)
        plan_windows(video.frames)
        if spec.ref_source == "uploaded":
            for frame, ref_id in spec.refs.items():
                if ref_id not in self.references:
                    raise NotFoundError(f"reference {ref_id} not found")
                if int(frame) not in spec.keyframes.indices:
                    raise KeyframeError(f"reference at frame {frame} has no matching keyframe")
        if spec.ref_source == "oracle_augmented_gt":
            if not spec.gt_video_id or spec.gt_video_id not in self.videos:
                raise NotFoundError("oracle source requires an ingested gt_video_id")
        job_id = hashlib.sha256(repr(spec).encode()).hexdigest()[:16]
        with self._lock:
            if job_id in self._jobs and self._jobs[job_id].status != "failed":
                return job_id  # identical spec: same job
            self._jobs[job_id] = RestoreJob(job_id, spec)
        self._queue.put(job_id)
        return job_id

    def job_status(self, job_id: str) -> dict:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"job {job_id} not found")
            return job.snapshot()

    def fetch_result(self, job_id: str) -> bytes:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise NotFoundError(f"job {job_id} not found")
            if job.status != "done":
                raise ConflictError(f"job {job_id} is {job.status}, not done")
            result_id = job.result_id
        return self.store.get(result_id)

    def fetch_xt(self, job_id: str, row: int) -> bytes:
        from .metrics import xt_slice_pgm

        video, _ = read_y4m(self.fetch_result(job_id))
        if not 0 <= row < video.shape[1]:
            raise ValueError(f"row {row} outside frame height {video.shape[1]}")
        return xt_slice_pgm(video, row)

    def wait(self, job_id: str, timeout: float = 300.0, poll: float = 0.05) -> dict:
        import time

        deadline = time.time() + timeout
        while time.time() < deadline:
            snap = self.job_status(job_id)
            if snap["status"] in ("done", "failed"):
                return snap
            time.sleep(poll)
        raise TimeoutError(f"job {job_id} did not finish within {timeout}s")

    # -- worker internals

    def _set(self, job_id: str, **updates):
        with self._lock:
            job = self._jobs[job_id]
            for k, v in updates.items():
                setattr(job, k, v)

    def _worker(self):
        while True:
            job_id = self._queue.get()
            try:
                with self._lock:
                    spec = self._jobs[job_id].spec
                self._set(job_id, status="running", progress=0.0)
                video, fps = read_y4m(self.store.get(spec.video_id))
                gt = None
                if spec.ref_source == "oracle_augmented_gt":
                    gt, _ = read_y4m(self.store.get(spec.gt_video_id))
                refs = self.engine.gather_references(spec, video, self.references, self.store, gt)
                restored = self.engine.run(
                    spec, video, refs, progress=lambda p: self._set(job_id, progress=p)
                )
                result_id = self.store.put(write_y4m(restored, fps))
                self._set(job_id, status="done", progress=1.0, result_id=result_id)
            except Exception as exc:  # noqa: BLE001 - job isolation boundary
                self._set(job_id, status="failed", error=str(exc))
            finally:
                self._queue.task_done()
