/** Typed client for the sledge design-service HTTP API. */

export type BBoxList = [number, number, number, number];

export interface TextElement {
    kind: "text";
    bbox: BBoxList;
    content: string;
    font_family: string;
    font_size: number;
    color: string;
}

export interface ImageElement {
    kind: "image";
    bbox: BBoxList;
    caption?: string;
}

export type Element = TextElement | ImageElement;

export function isTextElement(el: Element): el is TextElement {
    return el.kind === "text";
}

export interface StepRecord {
    index: number;
    instruction: string;
    asset_ref: string | null;
    elements: Element[];
}

export interface SessionInfo {
    id: string;
    width: number;
    height: number;
    background: string;
    theme: string | null;
    cursor: number;
    step_count: number;
    can_undo: boolean;
    can_redo: boolean;
}

export interface DocumentBody {
    canvas_width: number;
    canvas_height: number;
    background: string;
    theme: string | null;
    steps: StepRecord[];
}

export interface DocumentInfo {
    cursor: number;
    document: DocumentBody;
}

export interface StepResult {
    record: StepRecord;
    cursor: number;
    warnings: string[];
}

export interface MoveResult {
    cursor: number;
    moved: boolean;
}

export interface PatchResult {
    record: StepRecord;
    element: Element;
}

export interface CreateOptions {
    width?: number;
    height?: number;
    background?: string;
    theme?: string;
}

export interface StepRequest {
    instruction: string;
    seed?: number;
    refine?: boolean;
    dilationRadius?: number;
    asset?: File;
}

/** Partial text-element update; omitted fields are left untouched. */
export interface TextPatch {
    content?: string;
    font_family?: string;
    font_size?: number;
    color?: string;
    bbox?: BBoxList;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Structured service error parsed from the {"error": {...}} envelope. */
export class ApiError extends Error {
    constructor(
        readonly status: number,
        readonly code: string,
        message: string,
        readonly details?: unknown,
    ) {
        super(message);
        this.name = "ApiError";
    }

    static async fromResponse(res: Response): Promise<ApiError> {
        let code = "unknown_error";
        let message = `HTTP ${res.status}`;
        let details: unknown;
        try {
            const body = await res.json();
            const err = (body as { error?: Record<string, unknown> }).error;
            if (err && typeof err.code === "string") {
                code = err.code;
                message = typeof err.message === "string" ? err.message : message;
                details = err.details;
            }
        } catch {
            // non-JSON body: keep the generic message
        }
        return new ApiError(res.status, code, message, details);
    }
}

export class StudioClient {
    readonly baseUrl: string;
    private readonly fetchImpl: FetchLike;

    constructor(baseUrl: string, fetchImpl?: FetchLike) {
        this.baseUrl = baseUrl.replace(/\/+$/, "");
        this.fetchImpl = fetchImpl ?? ((url, init) => globalThis.fetch(url, init));
    }

    private async request(method: string, path: string, body?: unknown): Promise<unknown> {
        const init: RequestInit = { method };
        if (body instanceof FormData) {
            init.body = body;
        } else if (body !== undefined) {
            init.body = JSON.stringify(body);
            init.headers = { "content-type": "application/json" };
        }
        const res = await this.fetchImpl(this.baseUrl + path, init);
        if (!res.ok) {
            throw await ApiError.fromResponse(res);
        }
        return res.json();
    }

    async health(): Promise<{ status: string; version: string; kernels: string }> {
        return (await this.request("GET", "/healthz")) as {
            status: string;
            version: string;
            kernels: string;
        };
    }

    async createSession(opts: CreateOptions = {}): Promise<SessionInfo> {
        const created = (await this.request("POST", "/sessions", opts)) as SessionInfo;
        return this.getSession(created.id);
    }

    async getSession(id: string): Promise<SessionInfo> {
        return (await this.request("GET", this.sessionPath(id))) as SessionInfo;
    }

    async getDocument(id: string): Promise<DocumentInfo> {
        return (await this.request("GET", `${this.sessionPath(id)}/document`)) as DocumentInfo;
    }

    async submitStep(id: string, step: StepRequest): Promise<StepResult> {
        let body: FormData | Record<string, unknown>;
        if (step.asset !== undefined) {
            const form = new FormData();
            form.append("instruction", step.instruction);
            form.append("seed", String(step.seed ?? 0));
            if (step.refine !== undefined) {
                form.append("refine", step.refine ? "true" : "false");
            }
            if (step.dilationRadius !== undefined) {
                form.append("dilation_radius", String(step.dilationRadius));
            }
            form.append("asset", step.asset, step.asset.name);
            body = form;
        } else {
            body = { instruction: step.instruction };
            if (step.seed !== undefined) body.seed = step.seed;
            if (step.refine !== undefined) body.refine = step.refine;
            if (step.dilationRadius !== undefined) body.dilation_radius = step.dilationRadius;
        }
        return (await this.request("POST", `${this.sessionPath(id)}/steps`, body)) as StepResult;
    }

    async undo(id: string): Promise<MoveResult> {
        return (await this.request("POST", `${this.sessionPath(id)}/undo`)) as MoveResult;
    }

    async redo(id: string): Promise<MoveResult> {
        return (await this.request("POST", `${this.sessionPath(id)}/redo`)) as MoveResult;
    }

    async patchElement(
        id: string,
        stepIndex: number,
        elementIndex: number,
        patch: TextPatch,
    ): Promise<PatchResult> {
        const path = `${this.sessionPath(id)}/steps/${stepIndex}/elements/${elementIndex}`;
        return (await this.request("PATCH", path, patch)) as PatchResult;
    }

    /** Canvas URL for an <img>; cache-busted by step index plus a version counter. */
    canvasUrl(id: string, step: number, version: number): string {
        return `${this.baseUrl}${this.sessionPath(id)}/canvas?step=${step}&v=${version}`;
    }

    layerUrl(id: string, stepIndex: number, version: number): string {
        return `${this.baseUrl}${this.sessionPath(id)}/layers/${stepIndex}?v=${version}`;
    }

    /** Raw canvas PNG bytes, used by tests and the pixel-diff tooling. */
    async fetchCanvas(id: string, step?: number): Promise<Uint8Array> {
        const query = step === undefined ? "" : `?step=${step}`;
        const res = await this.fetchImpl(
            `${this.baseUrl}${this.sessionPath(id)}/canvas${query}`,
            { method: "GET" },
        );
        if (!res.ok) {
            throw await ApiError.fromResponse(res);
        }
        return new Uint8Array(await res.arrayBuffer());
    }

    private sessionPath(id: string): string {
        return `/sessions/${encodeURIComponent(id)}`;
    }
}
