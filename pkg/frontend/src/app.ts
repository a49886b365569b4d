import {
    isTextElement,
    StudioClient,
    type CreateOptions,
    type Element,
    type StepRecord,
    type TextPatch,
} from "./api.js";
import { StudioStore, type ConfirmBranch } from "./state.js";

export interface StudioOptions {
    /** Open this existing session; omitted means create a fresh one. */
    sessionId?: string;
    create?: CreateOptions;
    confirmBranch?: ConfirmBranch;
}

export interface Studio {
    store: StudioStore;
    root: HTMLElement;
}

const SWATCHES = [
    "#1A1A1AFF",
    "#FFFFFFFF",
    "#C62828FF",
    "#1565C0FF",
    "#2E7D32FF",
    "#F9A825FF",
];

const STUDIO_HTML = `
<div class="studio">
    <header class="topbar">
        <h1>sledge studio</h1>
        <span class="session-label" data-testid="session-label"></span>
        <span class="top-actions">
            <button type="button" data-testid="undo">Undo</button>
            <button type="button" data-testid="redo">Redo</button>
        </span>
    </header>
    <div class="banner" data-testid="banner" hidden>
        <span data-testid="banner-message"></span>
        <button type="button" data-testid="retry">Retry</button>
        <button type="button" data-testid="dismiss">Dismiss</button>
    </div>
    <main class="columns">
        <section class="canvas-pane">
            <div class="canvas-frame">
                <img data-testid="canvas" alt="design canvas" draggable="false">
                <img data-testid="diff-overlay" class="diff-overlay" alt="" hidden>
            </div>
            <div class="canvas-tools">
                <label class="diff-label">
                    <input type="checkbox" data-testid="diff-toggle">
                    diff vs previous state
                </label>
                <span data-testid="view-label"></span>
            </div>
            <form class="composer" data-testid="composer">
                <input data-testid="instruction" autocomplete="off"
                    placeholder="Describe the next step, quotes around literal text">
                <input data-testid="seed" type="number" placeholder="seed">
                <div class="dropzone" data-testid="dropzone">
                    <span>drop an image asset here</span>
                    <span class="asset-chip" data-testid="asset-chip" hidden></span>
                    <input type="file" data-testid="asset-input" accept="image/png" hidden>
                </div>
                <button type="submit" data-testid="generate">Generate</button>
                <p class="inline-error" data-testid="inline-error" hidden></p>
            </form>
        </section>
        <aside class="side">
            <section>
                <h2>Timeline</h2>
                <ol class="timeline" data-testid="timeline"></ol>
            </section>
            <section>
                <h2>Elements</h2>
                <ul class="elements" data-testid="elements"></ul>
            </section>
            <section>
                <h2>Text editor</h2>
                <div class="editor" data-testid="editor"></div>
            </section>
        </aside>
    </main>
</div>
`;

function escapeHtml(text: string): string {
    return text
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

function truncate(text: string, limit: number): string {
    return text.length <= limit ? text : text.slice(0, limit - 1) + "…";
}

function elementLabel(el: Element): string {
    if (isTextElement(el)) {
        return `text “${truncate(el.content, 32)}”`;
    }
    return el.caption ? `image · ${truncate(el.caption, 32)}` : "image";
}

class StudioView {
    private readonly q: <T extends HTMLElement>(testid: string) => T;
    private diffOn = false;
    private timelineKey = "";
    private elementsKey = "";
    private editorKey = "";

    constructor(
        private readonly root: HTMLElement,
        private readonly store: StudioStore,
    ) {
        root.innerHTML = STUDIO_HTML;
        this.q = (testid) => {
            const node = root.querySelector(`[data-testid="${testid}"]`);
            if (node === null) {
                throw new Error(`missing studio node: ${testid}`);
            }
            return node as never;
        };
        this.wire();
        store.subscribe(() => this.render());
        this.render();
    }

    private wire(): void {
        const composer = this.q<HTMLFormElement>("composer");
        composer.addEventListener("submit", (ev) => {
            ev.preventDefault();
            void this.store.submit();
        });
        this.q<HTMLInputElement>("instruction").addEventListener("input", (ev) => {
            this.store.setDraft((ev.target as HTMLInputElement).value);
        });
        this.q<HTMLInputElement>("seed").addEventListener("input", (ev) => {
            const raw = (ev.target as HTMLInputElement).value.trim();
            const seed = raw === "" ? null : Number.parseInt(raw, 10);
            this.store.setSeed(seed === null || Number.isNaN(seed) ? null : seed);
        });
        this.q<HTMLButtonElement>("undo").addEventListener("click", () => {
            void this.store.undoAction();
        });
        this.q<HTMLButtonElement>("redo").addEventListener("click", () => {
            void this.store.redoAction();
        });
        this.q<HTMLButtonElement>("retry").addEventListener("click", () => {
            void this.store.submit();
        });
        this.q<HTMLButtonElement>("dismiss").addEventListener("click", () => {
            this.store.dismissBanner();
        });
        this.q<HTMLInputElement>("diff-toggle").addEventListener("change", (ev) => {
            this.diffOn = (ev.target as HTMLInputElement).checked;
            this.render();
        });

        const dropzone = this.q<HTMLElement>("dropzone");
        dropzone.addEventListener("dragover", (ev) => ev.preventDefault());
        dropzone.addEventListener("drop", (ev) => {
            ev.preventDefault();
            const file = (ev as DragEvent).dataTransfer?.files?.[0] ?? null;
            this.store.setAsset(file);
        });
        const assetInput = this.q<HTMLInputElement>("asset-input");
        dropzone.addEventListener("click", (ev) => {
            if ((ev.target as HTMLElement).dataset.testid !== "asset-chip") {
                assetInput.click();
            }
        });
        assetInput.addEventListener("change", () => {
            this.store.setAsset(assetInput.files?.[0] ?? null);
        });
        this.q<HTMLElement>("asset-chip").addEventListener("click", () => {
            this.store.setAsset(null);
            assetInput.value = "";
        });

        this.q<HTMLElement>("timeline").addEventListener("click", (ev) => {
            const button = (ev.target as HTMLElement).closest("button[data-step]");
            if (button instanceof HTMLButtonElement && !button.disabled) {
                this.store.scrubTo(Number(button.dataset.step));
            }
        });
        this.q<HTMLElement>("elements").addEventListener("click", (ev) => {
            const button = (ev.target as HTMLElement).closest("button[data-element]");
            if (button instanceof HTMLButtonElement && !button.disabled) {
                this.store.select(Number(button.dataset.step), Number(button.dataset.element));
            }
        });
        this.q<HTMLElement>("editor").addEventListener("click", (ev) => {
            const target = ev.target as HTMLElement;
            if (target.dataset.color !== undefined) {
                void this.store.applyPatch({ color: target.dataset.color });
            } else if (target.dataset.testid === "apply") {
                void this.applyEditorForm();
            }
        });
    }

    private async applyEditorForm(): Promise<void> {
        const element = this.store.selectedElement();
        if (element === null || !isTextElement(element)) {
            return;
        }
        const editor = this.q<HTMLElement>("editor");
        const value = (testid: string) =>
            (editor.querySelector(`[data-testid="${testid}"]`) as HTMLInputElement).value;
        const patch: TextPatch = {};
        const content = value("edit-content");
        if (content !== element.content) patch.content = content;
        const color = value("edit-color").trim().toUpperCase();
        if (color !== "" && color !== element.color) patch.color = color;
        const family = value("edit-family").trim();
        if (family !== "" && family !== element.font_family) patch.font_family = family;
        const size = Number.parseInt(value("edit-size"), 10);
        if (!Number.isNaN(size) && size !== element.font_size) patch.font_size = size;
        if (Object.keys(patch).length > 0) {
            await this.store.applyPatch(patch);
        }
    }

    private render(): void {
        const state = this.store.getState();
        this.q<HTMLElement>("session-label").textContent =
            state.sessionId === null
                ? ""
                : `${state.sessionId} · ${state.width}×${state.height}`;

        const canvas = this.q<HTMLImageElement>("canvas");
        const src = this.store.canvasSrc();
        if (canvas.getAttribute("src") !== src && src !== "") {
            canvas.setAttribute("src", src);
        }
        const overlay = this.q<HTMLImageElement>("diff-overlay");
        const prev = this.diffOn ? this.store.previousCanvasSrc() : null;
        overlay.hidden = prev === null;
        if (prev !== null && overlay.getAttribute("src") !== prev) {
            overlay.setAttribute("src", prev);
        }
        this.q<HTMLElement>("view-label").textContent =
            `state ${this.store.viewStep()} of ${state.steps.length}` +
            (state.scrub !== null ? " (scrubbed)" : "");

        const instruction = this.q<HTMLInputElement>("instruction");
        if (instruction.value !== state.draft) {
            instruction.value = state.draft;
        }
        this.q<HTMLButtonElement>("generate").disabled = state.pending;
        instruction.disabled = state.pending;

        const inlineError = this.q<HTMLElement>("inline-error");
        inlineError.hidden = state.inlineError === null;
        inlineError.textContent = state.inlineError ?? "";

        const chip = this.q<HTMLElement>("asset-chip");
        chip.hidden = state.asset === null;
        chip.textContent = state.asset === null ? "" : `${state.asset.name} ×`;

        const banner = this.q<HTMLElement>("banner");
        banner.hidden = state.banner === null;
        if (state.banner !== null) {
            this.q<HTMLElement>("banner-message").textContent =
                state.banner.code === null
                    ? state.banner.message
                    : `${state.banner.code}: ${state.banner.message}`;
            this.q<HTMLButtonElement>("retry").hidden = !state.banner.retryable;
        }

        this.q<HTMLButtonElement>("undo").disabled = state.pending || !this.store.canUndo();
        this.q<HTMLButtonElement>("redo").disabled = state.pending || !this.store.canRedo();

        this.renderTimeline();
        this.renderElements();
        this.renderEditor();
    }

    private renderTimeline(): void {
        const state = this.store.getState();
        const view = this.store.viewStep();
        const key = JSON.stringify([
            state.steps.map((s) => s.instruction),
            state.cursor,
            view,
        ]);
        if (key === this.timelineKey) {
            return;
        }
        this.timelineKey = key;
        const cards: string[] = [];
        for (let k = 0; k <= state.steps.length; k++) {
            const classes = ["timeline-card"];
            if (k === view) classes.push("current");
            if (k > state.cursor) classes.push("beyond");
            const label =
                k === 0
                    ? "blank canvas"
                    : `${k - 1}: ${escapeHtml(truncate(state.steps[k - 1].instruction, 48))}`;
            const mark = k === state.cursor ? '<span class="cursor-mark">◀</span>' : "";
            cards.push(
                `<li><button type="button" class="${classes.join(" ")}" ` +
                    `data-step="${k}" data-testid="timeline-${k}">${label}</button>${mark}</li>`,
            );
        }
        this.q<HTMLElement>("timeline").innerHTML = cards.join("");
    }

    private renderElements(): void {
        const state = this.store.getState();
        const key = JSON.stringify([state.steps, state.selected]);
        if (key === this.elementsKey) {
            return;
        }
        this.elementsKey = key;
        const rows: string[] = [];
        state.steps.forEach((record: StepRecord, i: number) => {
            record.elements.forEach((el, j) => {
                const classes = ["element-row"];
                if (state.selected?.step === i && state.selected.element === j) {
                    classes.push("selected");
                }
                const disabled = isTextElement(el) ? "" : " disabled";
                rows.push(
                    `<li><button type="button" class="${classes.join(" ")}"` +
                        ` data-step="${i}" data-element="${j}"` +
                        ` data-testid="element-${i}-${j}"${disabled}>` +
                        `step ${i} · ${escapeHtml(elementLabel(el))}</button></li>`,
                );
            });
        });
        this.q<HTMLElement>("elements").innerHTML =
            rows.length > 0 ? rows.join("") : '<li class="empty">no elements yet</li>';
    }

    private renderEditor(): void {
        const state = this.store.getState();
        const element = this.store.selectedElement();
        const key = JSON.stringify([state.selected, element, state.pending]);
        if (key === this.editorKey) {
            return;
        }
        this.editorKey = key;
        const editor = this.q<HTMLElement>("editor");
        if (element === null) {
            editor.innerHTML = '<p class="empty">select a text element to edit it</p>';
            return;
        }
        if (!isTextElement(element)) {
            editor.innerHTML =
                '<p class="empty" data-testid="editor-disabled">' +
                "image elements have no editable text attributes</p>";
            return;
        }
        const disabled = state.pending ? " disabled" : "";
        const swatches = SWATCHES.map(
            (color, i) =>
                `<button type="button" class="swatch" data-color="${color}"` +
                ` data-testid="swatch-${i}" style="background:${color.slice(0, 7)}"` +
                `${disabled} title="${color}"></button>`,
        ).join("");
        editor.innerHTML = `
            <label>content
                <input data-testid="edit-content" value="${escapeHtml(element.content)}"${disabled}>
            </label>
            <label>color
                <input data-testid="edit-color" value="${element.color}"${disabled}>
            </label>
            <div class="swatch-row">${swatches}</div>
            <label>font family
                <input data-testid="edit-family" value="${escapeHtml(element.font_family)}"${disabled}>
            </label>
            <label>font size
                <input data-testid="edit-size" type="number" value="${element.font_size}"${disabled}>
            </label>
            <button type="button" data-testid="apply"${disabled}>Apply</button>
        `;
    }
}

export async function createStudio(
    root: HTMLElement,
    client: StudioClient,
    options: StudioOptions = {},
): Promise<Studio> {
    const store = new StudioStore(client, { confirmBranch: options.confirmBranch });
    if (options.sessionId !== undefined) {
        await store.open(options.sessionId);
    } else {
        await store.create(options.create ?? {});
    }
    new StudioView(root, store);
    return { store, root };
}
