import {
    ApiError,
    isTextElement,
    StudioClient,
    type BBoxList,
    type Element,
    type StepRecord,
    type TextPatch,
} from "./api.js";
import { ActionHistory } from "./history.js";

export interface Selection {
    step: number;
    element: number;
}

export interface Banner {
    message: string;
    code: string | null;
    retryable: boolean;
}

/**
 * Everything the studio renders. The service owns the design itself: steps
 * and cursor are whatever the last document fetch returned, never a local
 * edit, and every mutation below is an API round trip followed by a refresh.
 */
export interface StudioState {
    sessionId: string | null;
    width: number;
    height: number;
    background: string;
    theme: string | null;
    steps: StepRecord[];
    cursor: number;
    serverCanUndo: boolean;
    serverCanRedo: boolean;
    scrub: number | null;
    selected: Selection | null;
    pending: boolean;
    draft: string;
    seed: number | null;
    asset: File | null;
    inlineError: string | null;
    banner: Banner | null;
    canvasVersion: number;
}

export type ConfirmBranch = () => boolean | Promise<boolean>;

export interface StoreOptions {
    /** Asked before a submit that would truncate steps after the target cursor. */
    confirmBranch?: ConfirmBranch;
}

function initialState(): StudioState {
    return {
        sessionId: null,
        width: 0,
        height: 0,
        background: "#FFFFFFFF",
        theme: null,
        steps: [],
        cursor: 0,
        serverCanUndo: false,
        serverCanRedo: false,
        scrub: null,
        selected: null,
        pending: false,
        draft: "",
        seed: null,
        asset: null,
        inlineError: null,
        banner: null,
        canvasVersion: 0,
    };
}

function bannerFrom(err: unknown): Banner {
    if (err instanceof ApiError) {
        return { message: err.message, code: err.code, retryable: true };
    }
    const message = err instanceof Error ? err.message : String(err);
    return { message, code: null, retryable: true };
}

export class StudioStore {
    private state = initialState();
    private listeners = new Set<() => void>();
    private history = new ActionHistory();
    private readonly confirmBranch: ConfirmBranch;
    private lastOperation: Promise<void> = Promise.resolve();

    constructor(
        private readonly client: StudioClient,
        options: StoreOptions = {},
    ) {
        this.confirmBranch = options.confirmBranch ?? (() => true);
    }

    getState(): Readonly<StudioState> {
        return this.state;
    }

    subscribe(listener: () => void): () => void {
        this.listeners.add(listener);
        return () => this.listeners.delete(listener);
    }

    /** Resolves once no tracked operation is in flight; for tests and boot code. */
    async whenIdle(): Promise<void> {
        let last: Promise<void>;
        do {
            last = this.lastOperation;
            await last;
        } while (last !== this.lastOperation);
    }

    private set(partial: Partial<StudioState>): void {
        this.state = { ...this.state, ...partial };
        for (const listener of this.listeners) {
            listener();
        }
    }

    private track<T>(op: () => Promise<T>): Promise<T> {
        const result = op();
        this.lastOperation = result.then(
            () => undefined,
            () => undefined,
        );
        return result;
    }

    private requireSession(): string {
        const id = this.state.sessionId;
        if (id === null) {
            throw new Error("no session is open");
        }
        return id;
    }

    async create(opts: Parameters<StudioClient["createSession"]>[0] = {}): Promise<void> {
        return this.track(async () => {
            const info = await this.client.createSession(opts);
            await this.openLoaded(info.id);
        });
    }

    async open(id: string): Promise<void> {
        return this.track(async () => {
            await this.client.getSession(id);
            await this.openLoaded(id);
        });
    }

    private async openLoaded(id: string): Promise<void> {
        this.history.clear();
        this.set({ ...initialState(), sessionId: id });
        await this.refreshFromServer();
    }

    async refresh(): Promise<void> {
        return this.track(() => this.refreshFromServer());
    }

    /** Re-fetch the document; the timeline always mirrors this last fetch. */
    private async refreshFromServer(): Promise<void> {
        const id = this.requireSession();
        const info = await this.client.getDocument(id);
        const doc = info.document;
        let selected = this.state.selected;
        if (selected !== null) {
            const step = doc.steps[selected.step];
            if (step === undefined || step.elements[selected.element] === undefined) {
                selected = null;
            }
        }
        this.set({
            width: doc.canvas_width,
            height: doc.canvas_height,
            background: doc.background,
            theme: doc.theme,
            steps: doc.steps,
            cursor: info.cursor,
            serverCanUndo: info.cursor > 0,
            serverCanRedo: info.cursor < doc.steps.length,
            selected,
        });
    }

    setDraft(text: string): void {
        this.set({ draft: text, inlineError: null });
    }

    setSeed(seed: number | null): void {
        this.set({ seed });
    }

    setAsset(asset: File | null): void {
        this.set({ asset });
    }

    select(step: number, element: number): void {
        const record = this.state.steps[step];
        if (record === undefined || record.elements[element] === undefined) {
            return;
        }
        this.set({ selected: { step, element }, inlineError: null });
    }

    clearSelection(): void {
        this.set({ selected: null });
    }

    selectedElement(): Element | null {
        const sel = this.state.selected;
        if (sel === null) {
            return null;
        }
        return this.state.steps[sel.step]?.elements[sel.element] ?? null;
    }

    /** Canvas state index currently shown: the scrub position, else the cursor. */
    viewStep(): number {
        return this.state.scrub ?? this.state.cursor;
    }

    scrubTo(step: number): void {
        const clamped = Math.max(0, Math.min(step, this.state.steps.length));
        this.set({ scrub: clamped === this.state.cursor ? null : clamped });
    }

    scrubLive(): void {
        this.set({ scrub: null });
    }

    canvasSrc(): string {
        const id = this.state.sessionId;
        if (id === null) {
            return "";
        }
        return this.client.canvasUrl(id, this.viewStep(), this.state.canvasVersion);
    }

    /** Source for the diff overlay: the state one step before the view, if any. */
    previousCanvasSrc(): string | null {
        const id = this.state.sessionId;
        if (id === null || this.viewStep() === 0) {
            return null;
        }
        return this.client.canvasUrl(id, this.viewStep() - 1, this.state.canvasVersion);
    }

    canUndo(): boolean {
        return this.history.canUndo || this.state.serverCanUndo;
    }

    canRedo(): boolean {
        return this.history.canRedo || this.state.serverCanRedo;
    }

    dismissBanner(): void {
        this.set({ banner: null });
    }

    /**
     * Submit the drafted instruction as a new step. When the view is scrubbed
     * back (or a redo tail exists) the server cursor is first aligned to the
     * viewed state with undo/redo calls, so the new step branches exactly
     * where the designer is looking; that truncation is gated on confirmBranch.
     */
    async submit(): Promise<boolean> {
        if (this.state.pending || this.state.sessionId === null) {
            return false;
        }
        const instruction = this.state.draft.trim();
        if (instruction === "") {
            this.set({ inlineError: "Enter an instruction before generating." });
            return false;
        }
        return this.track(async () => {
            const target = this.viewStep();
            const branching = target < this.state.steps.length;
            if (branching && !(await this.confirmBranch())) {
                return false;
            }
            return this.runSubmit(instruction, target, branching);
        });
    }

    private async runSubmit(
        instruction: string,
        target: number,
        branching: boolean,
    ): Promise<boolean> {
        const id = this.requireSession();
        this.set({ pending: true, inlineError: null, banner: null });
        try {
            let cursor = this.state.cursor;
            while (cursor > target) {
                cursor = (await this.client.undo(id)).cursor;
            }
            while (cursor < target) {
                cursor = (await this.client.redo(id)).cursor;
            }
            await this.client.submitStep(id, {
                instruction,
                seed: this.state.seed ?? undefined,
                asset: this.state.asset ?? undefined,
            });
            if (branching) {
                this.history.clear();
            }
            this.history.push({ kind: "step" });
            this.set({ draft: "", asset: null, scrub: null });
            await this.refreshFromServer();
            this.set({ canvasVersion: this.state.canvasVersion + 1 });
            return true;
        } catch (err) {
            this.set({ banner: bannerFrom(err) });
            await this.resyncAfterError();
            return false;
        } finally {
            this.set({ pending: false });
        }
    }

    /** Patch the selected text element; the reverse patch goes on the undo stack. */
    async applyPatch(patch: TextPatch): Promise<boolean> {
        if (this.state.pending || this.state.sessionId === null) {
            return false;
        }
        const sel = this.state.selected;
        if (sel === null) {
            return false;
        }
        const element = this.state.steps[sel.step]?.elements[sel.element];
        if (element === undefined || !isTextElement(element)) {
            this.set({ inlineError: "Only text elements have editable attributes." });
            return false;
        }
        const before: TextPatch = {};
        if (patch.content !== undefined) before.content = element.content;
        if (patch.font_family !== undefined) before.font_family = element.font_family;
        if (patch.font_size !== undefined) before.font_size = element.font_size;
        if (patch.color !== undefined) before.color = element.color;
        if (patch.bbox !== undefined) before.bbox = [...element.bbox] as BBoxList;
        if (Object.keys(before).length === 0) {
            return false;
        }
        return this.track(async () => {
            const id = this.requireSession();
            this.set({ pending: true, inlineError: null, banner: null });
            try {
                await this.client.patchElement(id, sel.step, sel.element, patch);
                this.history.push({
                    kind: "patch",
                    step: sel.step,
                    element: sel.element,
                    before,
                    after: { ...patch },
                });
                this.set({ scrub: null });
                await this.refreshFromServer();
                this.set({ canvasVersion: this.state.canvasVersion + 1 });
                return true;
            } catch (err) {
                this.set({ banner: bannerFrom(err) });
                return false;
            } finally {
                this.set({ pending: false });
            }
        });
    }

    /**
     * Undo the latest studio action. Steps are undone through the service
     * cursor; text patches are undone by patching the previous attributes
     * back. With no local history (fresh page load) it falls back to a plain
     * server cursor undo.
     */
    async undoAction(): Promise<boolean> {
        if (this.state.pending || this.state.sessionId === null) {
            return false;
        }
        return this.track(async () => {
            const id = this.requireSession();
            const action = this.history.undo();
            if (action === null && !this.state.serverCanUndo) {
                return false;
            }
            this.set({ pending: true, banner: null });
            try {
                if (action === null || action.kind === "step") {
                    await this.client.undo(id);
                } else {
                    await this.client.patchElement(id, action.step, action.element, action.before);
                }
                this.set({ scrub: null });
                await this.refreshFromServer();
                this.set({ canvasVersion: this.state.canvasVersion + 1 });
                return true;
            } catch (err) {
                if (action !== null) {
                    this.history.redo();
                }
                this.set({ banner: bannerFrom(err) });
                return false;
            } finally {
                this.set({ pending: false });
            }
        });
    }

    async redoAction(): Promise<boolean> {
        if (this.state.pending || this.state.sessionId === null) {
            return false;
        }
        return this.track(async () => {
            const id = this.requireSession();
            const action = this.history.redo();
            if (action === null && !this.state.serverCanRedo) {
                return false;
            }
            this.set({ pending: true, banner: null });
            try {
                if (action === null || action.kind === "step") {
                    await this.client.redo(id);
                } else {
                    await this.client.patchElement(id, action.step, action.element, action.after);
                }
                this.set({ scrub: null });
                await this.refreshFromServer();
                this.set({ canvasVersion: this.state.canvasVersion + 1 });
                return true;
            } catch (err) {
                if (action !== null) {
                    this.history.undo();
                }
                this.set({ banner: bannerFrom(err) });
                return false;
            } finally {
                this.set({ pending: false });
            }
        });
    }

    /** After a failed submit the cursor may sit at the branch point; re-sync. */
    private async resyncAfterError(): Promise<void> {
        try {
            await this.refreshFromServer();
        } catch {
            // keep the original banner; the next successful call re-syncs
        }
    }
}
