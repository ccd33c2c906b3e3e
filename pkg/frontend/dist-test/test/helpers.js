// Shared test plumbing: spawn the real Python review service on a free
// port and wait until it answers.
import { spawn } from "node:child_process";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
const here = dirname(fileURLToPath(import.meta.url));
export async function startServer(port) {
    const script = join(here, "..", "..", "test", "serve_fixture.py");
    const child = spawn("python3", [script, "--port", String(port)], {
        stdio: ["ignore", "pipe", "inherit"],
    });
    const baseUrl = `http://127.0.0.1:${port}`;
    const deadline = Date.now() + 20_000;
    for (;;) {
        try {
            const resp = await fetch(`${baseUrl}/api/checklist`);
            if (resp.ok)
                break;
        }
        catch {
            // not listening yet
        }
        if (Date.now() > deadline) {
            child.kill();
            throw new Error("fixture server did not come up within 20s");
        }
        await new Promise((resolve) => setTimeout(resolve, 150));
    }
    return { baseUrl, stop: () => child.kill() };
}
