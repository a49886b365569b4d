import { StudioClient } from "./api.js";
import { createStudio } from "./app.js";

const DEFAULT_BASE_URL = "http://127.0.0.1:8787";

function serviceBaseUrl(): string {
    const meta = document.querySelector('meta[name="service-base-url"]');
    const fromMeta = meta?.getAttribute("content")?.trim();
    return fromMeta || DEFAULT_BASE_URL;
}

function sessionFromHash(): string | undefined {
    const match = /#session=([^&]+)/.exec(window.location.hash);
    return match === null ? undefined : decodeURIComponent(match[1]);
}

async function boot(): Promise<void> {
    const root = document.getElementById("app");
    if (root === null) {
        throw new Error("missing #app element");
    }
    const client = new StudioClient(serviceBaseUrl());
    const studio = await createStudio(root, client, {
        sessionId: sessionFromHash(),
        confirmBranch: () =>
            window.confirm("Generating here discards the steps after this point. Continue?"),
    });
    const id = studio.store.getState().sessionId;
    if (id !== null) {
        window.location.hash = `session=${encodeURIComponent(id)}`;
    }
}

boot().catch((err) => {
    const root = document.getElementById("app");
    if (root !== null) {
        root.innerHTML = `<p class="boot-error">failed to start: ${String(err)}</p>`;
    }
});
