"""JSON-over-HTTP service for the restoration pipeline.

Raw media bodies are accepted where natural (Y4M upload, PPM with query
parameters); JSON bodies carry base64 payloads otherwise.  Long results
stream back as raw bytes with their native content types.
"""

from __future__ import annotations

import base64
import os

from fastapi import FastAPI, HTTPException, Query, Request, Response

from .conditioning import KeyframeError, KeyframeSet, select_keyframes
from .pipeline import ConflictError, JobEngine, NotFoundError, RestoreSpec
from .video_io import Mp4ParseError, VideoFormatError

FRONTEND_DIST = os.path.join(os.path.dirname(__file__), "..", "..", "frontend", "dist")


def _b64(field: str, payload: dict) -> bytes:
    try:
        return base64.b64decode(payload[field])
    except KeyError:
        raise HTTPException(400, f"missing field {field!r}")
    except Exception:
        raise HTTPException(400, f"field {field!r} is not valid base64")


def create_app(engine: JobEngine) -> FastAPI:
    app = FastAPI(title="sparkprop", version="0.1.0")

    @app.exception_handler(NotFoundError)
    async def _nf(request, exc):
        raise HTTPException(404, str(exc))

    def _video_payload(rec):
        return {
            "id": rec.video_id,
            "t": rec.frames,
            "h": rec.height,
            "w": rec.width,
            "fps": list(rec.fps),
            "iframes": list(rec.iframes),
        }

    @app.post("/v1/videos")
    async def post_video(request: Request, name: str = Query("")):
        body = await request.body()
        mp4 = None
        if request.headers.get("content-type", "").startswith("application/json"):
            payload = await request.json()
            body = _b64("y4m_b64", payload)
            if payload.get("mp4_b64"):
                mp4 = _b64("mp4_b64", payload)
            name = payload.get("name", name)
        try:
            rec = engine.add_video(body, name=name, mp4_sidecar=mp4)
        except (VideoFormatError, Mp4ParseError) as exc:
            raise HTTPException(400, str(exc))
        return _video_payload(rec)

    @app.get("/v1/videos/{video_id}")
    def get_video(video_id: str):
        rec = engine.videos.get(video_id)
        if rec is None:
            raise HTTPException(404, f"video {video_id} not found")
        return _video_payload(rec)

    @app.get("/v1/videos/{video_id}/frame")
    def get_video_frame(video_id: str, t: int = Query(..., ge=0)):
        from .video_io import read_y4m, write_ppm

        rec = engine.videos.get(video_id)
        if rec is None:
            raise HTTPException(404, f"video {video_id} not found")
        video, _ = read_y4m(engine.store.get(video_id))
        if t >= video.shape[0]:
            raise HTTPException(400, f"frame {t} outside clip of {video.shape[0]} frames")
        return Response(write_ppm(video[t]), media_type="image/x-portable-pixmap")

    @app.post("/v1/references")
    async def post_reference(
        request: Request,
        frame_index: int | None = Query(None, ge=0),
        task_prompt: str = Query(""),
        content_prompt: str = Query(""),
    ):
        body = await request.body()
        if request.headers.get("content-type", "").startswith("application/json"):
            payload = await request.json()
            body = _b64("ppm_b64", payload)
            frame_index = payload.get("frame_index", frame_index)
            task_prompt = payload.get("task_prompt", task_prompt)
            content_prompt = payload.get("content_prompt", content_prompt)
        if frame_index is None:
            raise HTTPException(400, "frame_index is required")
        try:
            rec = engine.add_reference(body, int(frame_index), task_prompt, content_prompt)
        except VideoFormatError as exc:
            raise HTTPException(400, str(exc))
        return {"ref_id": rec.ref_id, "frame_index": rec.frame_index}

    @app.post("/v1/jobs")
    async def post_job(request: Request):
        payload = await request.json()
        video_id = payload.get("video_id", "")
        rec = engine.videos.get(video_id)
        if rec is None:
            raise HTTPException(404, f"video {video_id} not found")
        try:
            strategy = payload.get("strategy", "manual")
            if strategy == "manual":
                keys = KeyframeSet(tuple(payload.get("keyframes", [])), "manual")
            elif strategy == "iframe":
                keys = select_keyframes("iframe", rec.frames, sync_table=list(rec.iframes))
            elif strategy == "random":
                import numpy as np

                keys = select_keyframes(
                    "random", rec.frames, rng=np.random.default_rng(payload.get("seed", 0))
                )
            elif strategy == "uniform":
                keys = select_keyframes("uniform", rec.frames, count=int(payload.get("count", 1)))
            else:
                raise HTTPException(400, f"unknown strategy {strategy!r}")
            spec = RestoreSpec(
                video_id=video_id,
                keyframes=keys,
                ref_source=payload.get("ref_source", "none"),
                refs={int(k): v for k, v in payload.get("refs", {}).items()},
                guidance_s=float(payload.get("guidance_s", 1.0)),
                gt_video_id=payload.get("gt_video_id"),
                oracle_seed=int(payload.get("oracle_seed", 0)),
                out_scale=int(payload.get("out_scale", 1)),
            )
            job_id = engine.submit(spec)
        except (KeyframeError, ValueError) as exc:
            raise HTTPException(400, str(exc))
        except NotFoundError as exc:
            raise HTTPException(404, str(exc))
        return {"job_id": job_id}

    @app.get("/v1/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            return engine.job_status(job_id)
        except NotFoundError as exc:
            raise HTTPException(404, str(exc))

    @app.get("/v1/jobs/{job_id}/result")
    def get_result(job_id: str):
        try:
            data = engine.fetch_result(job_id)
        except NotFoundError as exc:
            raise HTTPException(404, str(exc))
        except ConflictError as exc:
            raise HTTPException(409, str(exc))
        return Response(data, media_type="video/x-y4m")

    @app.get("/v1/jobs/{job_id}/xt")
    def get_xt(job_id: str, row: int = Query(..., ge=0)):
        try:
            data = engine.fetch_xt(job_id, row)
        except NotFoundError as exc:
            raise HTTPException(404, str(exc))
        except ConflictError as exc:
            raise HTTPException(409, str(exc))
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return Response(data, media_type="image/x-portable-graymap")

    @app.get("/v1/jobs/{job_id}/frame")
    def get_job_frame(job_id: str, t: int = Query(..., ge=0)):
        from .video_io import read_y4m, write_ppm

        try:
            video, _ = read_y4m(engine.fetch_result(job_id))
        except NotFoundError as exc:
            raise HTTPException(404, str(exc))
        except ConflictError as exc:
            raise HTTPException(409, str(exc))
        if t >= video.shape[0]:
            raise HTTPException(400, f"frame {t} outside clip of {video.shape[0]} frames")
        return Response(write_ppm(video[t]), media_type="image/x-portable-pixmap")

    if os.path.isdir(FRONTEND_DIST):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=FRONTEND_DIST, html=True), name="ui")

    return app
